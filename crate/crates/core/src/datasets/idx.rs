//! IDX files as used by MNIST: a big-endian `u32` magic number, one
//! big-endian `u32` per dimension, then unsigned bytes.

use std::fs;
use std::path::Path;

use super::{Dataset, DatasetError, Split};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn header(path: &Path, bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>, DatasetError> {
    let need = 4 * (dims + 1);
    let truncated = || DatasetError::Truncated {
        path: path.into(),
        len: bytes.len(),
        record: need,
    };
    if bytes.len() < 4 {
        return Err(truncated());
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let found = word(0);
    if found != magic {
        return Err(DatasetError::BadMagic {
            path: path.into(),
            found,
            expected: magic,
        });
    }
    if bytes.len() < need {
        return Err(truncated());
    }
    Ok((1..=dims).map(|i| word(i) as usize).collect())
}

fn payload<'a>(path: &Path, bytes: &'a [u8], offset: usize, len: usize) -> Result<&'a [u8], DatasetError> {
    let body = &bytes[offset..];
    if body.len() != len {
        return Err(DatasetError::Truncated {
            path: path.into(),
            len: bytes.len(),
            record: len + offset,
        });
    }
    Ok(body)
}

/// Images as `(count, rows, cols, pixels)`.
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, usize, Vec<u8>), DatasetError> {
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    let dims = header(path, &bytes, IMAGES_MAGIC, 3)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let len = n
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| DatasetError::Invalid(format!("{}: image dimensions overflow", path.display())))?;
    let body = payload(path, &bytes, 16, len)?;
    Ok((n, rows, cols, body.to_vec()))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>, DatasetError> {
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    let dims = header(path, &bytes, LABELS_MAGIC, 1)?;
    Ok(payload(path, &bytes, 8, dims[0])?.to_vec())
}

/// Load an image/label file pair; pixels scaled by `1/255` into a
/// `[1, rows, cols]` sample shape. The class count is one more than the
/// largest label, and at least 2.
pub fn load_idx(images: &Path, labels: &Path, split: Split) -> Result<Dataset, DatasetError> {
    let (n, rows, cols, pixels) = read_idx_images(images)?;
    let raw_labels = read_idx_labels(labels)?;
    if raw_labels.len() != n {
        return Err(DatasetError::CountMismatch {
            images: n,
            labels: raw_labels.len(),
        });
    }
    let labels: Vec<usize> = raw_labels.into_iter().map(usize::from).collect();
    let classes = labels.iter().max().map_or(2, |m| (m + 1).max(2));
    let features = pixels.into_iter().map(|b| f32::from(b) / 255.0).collect();
    Dataset::new(features, vec![1, rows, cols], labels, classes, split)
}

pub fn write_idx_images(path: &Path, rows: usize, cols: usize, pixels: &[u8]) -> Result<(), DatasetError> {
    let per = rows * cols;
    if per == 0 || !pixels.len().is_multiple_of(per) {
        return Err(DatasetError::Invalid(format!(
            "{} pixel bytes do not tile {rows}x{cols} images",
            pixels.len()
        )));
    }
    let mut bytes = Vec::with_capacity(16 + pixels.len());
    for word in [IMAGES_MAGIC, (pixels.len() / per) as u32, rows as u32, cols as u32] {
        bytes.extend_from_slice(&word.to_be_bytes());
    }
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<(), DatasetError> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}
