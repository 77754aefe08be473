//! Benchmark dataset readers, synthetic data, and the class-imbalance
//! transform.

mod cifar;
mod idx;
mod imbalance;
mod synth;

use std::path::PathBuf;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cifar::{load_cifar10, read_cifar_batch, write_cifar_batch, CIFAR_RECORD_BYTES};
pub use idx::{load_idx, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels};
pub use imbalance::{make_imbalanced, ImbalanceSpec};
pub use synth::{synth_blobs, SynthManifest, SynthSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: truncated file ({len} bytes is not a whole number of {record}-byte records)")]
    Truncated {
        path: PathBuf,
        len: usize,
        record: usize,
    },
    #[error("{path}: label {label} out of range for {classes} classes")]
    LabelOutOfRange {
        path: PathBuf,
        label: usize,
        classes: usize,
    },
    #[error("{path}: bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("sample count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("unachievable imbalance: {0}")]
    UnachievableRatio(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// `N` samples of a fixed per-sample shape with integer labels in `[0, K)`.
///
/// Features are stored row-major in single precision; sample `i` occupies
/// `features[i * sample_len .. (i + 1) * sample_len]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f32>,
    pub sample_shape: Vec<usize>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(
        features: Vec<f32>,
        sample_shape: Vec<usize>,
        labels: Vec<usize>,
        classes: usize,
        split: Split,
    ) -> Result<Self, DatasetError> {
        let ds = Self {
            features,
            sample_shape,
            labels,
            classes,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |m: String| Err(DatasetError::Invalid(m));
        if self.classes < 2 {
            return invalid(format!("need at least 2 classes, got {}", self.classes));
        }
        let len = self.sample_len();
        if len == 0 {
            return invalid("empty sample shape".into());
        }
        if self.features.len() != self.labels.len() * len {
            return invalid(format!(
                "{} feature values for {} samples of {len}",
                self.features.len(),
                self.labels.len()
            ));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.classes) {
            return invalid(format!("label {l} >= {} classes", self.classes));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite feature value".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample_len(&self) -> usize {
        self.sample_shape.iter().product()
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        let n = self.sample_len();
        &self.features[i * n..(i + 1) * n]
    }

    /// Samples `ids` gathered into an `ids.len() x sample_len` matrix.
    pub fn gather(&self, ids: &[usize]) -> Array2<f64> {
        let n = self.sample_len();
        let mut out = Array2::zeros((ids.len(), n));
        for (mut row, &id) in out.rows_mut().into_iter().zip(ids) {
            for (dst, &src) in row.iter_mut().zip(self.sample(id)) {
                *dst = f64::from(src);
            }
        }
        out
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Write one `label,x0,x1,...` row per sample, with a header.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_string()];
        header.extend((0..self.sample_len()).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.labels[i].to_string()];
            row.extend(self.sample(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// New dataset holding `ids` in the given order.
    pub fn subset(&self, ids: &[usize]) -> Self {
        let mut features = Vec::with_capacity(ids.len() * self.sample_len());
        for &id in ids {
            features.extend_from_slice(self.sample(id));
        }
        Self {
            features,
            sample_shape: self.sample_shape.clone(),
            labels: ids.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            split: self.split,
        }
    }
}
