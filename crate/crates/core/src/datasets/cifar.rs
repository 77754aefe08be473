//! CIFAR-10 binary batches.
//!
//! Each record is one label byte followed by 3 x 32 x 32 pixel bytes stored
//! channel-major (all red, then green, then blue). Files can be downloaded
//! from <https://www.cs.toronto.edu/~kriz/cifar.html> (binary version).

use std::fs;
use std::path::Path;

use super::{Dataset, DatasetError, Split};

const CHANNELS: usize = 3;
const SIDE: usize = 32;
const PIXELS: usize = CHANNELS * SIDE * SIDE;
pub const CIFAR_RECORD_BYTES: usize = PIXELS + 1;
const CLASSES: usize = 10;

const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
const TEST_FILE: &str = "test_batch.bin";

/// Parse one batch file; pixels are scaled to `[0, 1]` by `1/255`.
pub fn read_cifar_batch(path: &Path, split: Split) -> Result<Dataset, DatasetError> {
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    if bytes.len() % CIFAR_RECORD_BYTES != 0 {
        return Err(DatasetError::Truncated {
            path: path.into(),
            len: bytes.len(),
            record: CIFAR_RECORD_BYTES,
        });
    }
    let n = bytes.len() / CIFAR_RECORD_BYTES;
    let mut labels = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * PIXELS);
    for record in bytes.chunks_exact(CIFAR_RECORD_BYTES) {
        let label = usize::from(record[0]);
        if label >= CLASSES {
            return Err(DatasetError::LabelOutOfRange {
                path: path.into(),
                label,
                classes: CLASSES,
            });
        }
        labels.push(label);
        features.extend(record[1..].iter().map(|&b| f32::from(b) / 255.0));
    }
    Dataset::new(features, vec![CHANNELS, SIDE, SIDE], labels, CLASSES, split)
}

/// Train (five batches, 50,000 samples) and test (10,000) splits from the
/// extracted `cifar-10-batches-bin` directory.
pub fn load_cifar10(dir: &Path) -> Result<(Dataset, Dataset), DatasetError> {
    let mut train = read_cifar_batch(&dir.join(TRAIN_FILES[0]), Split::Train)?;
    for name in &TRAIN_FILES[1..] {
        let part = read_cifar_batch(&dir.join(name), Split::Train)?;
        train.features.extend(part.features);
        train.labels.extend(part.labels);
    }
    let test = read_cifar_batch(&dir.join(TEST_FILE), Split::Test)?;
    Ok((train, test))
}

/// Write raw records in the batch format. Each image must hold
/// `3 * 32 * 32` bytes in channel-major order.
pub fn write_cifar_batch(path: &Path, records: &[(u8, Vec<u8>)]) -> Result<(), DatasetError> {
    let mut bytes = Vec::with_capacity(records.len() * CIFAR_RECORD_BYTES);
    for (label, pixels) in records {
        if pixels.len() != PIXELS {
            return Err(DatasetError::Invalid(format!(
                "record has {} pixel bytes, expected {PIXELS}",
                pixels.len()
            )));
        }
        bytes.push(*label);
        bytes.extend_from_slice(pixels);
    }
    fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}
