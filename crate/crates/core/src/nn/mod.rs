//! Small dense/convolutional classifiers trained with momentum SGD.
//!
//! Everything here runs in `f64` on a single thread so that a fixed set of
//! seeds always yields bit-identical parameters.

mod checkpoint;
mod gradcheck;
mod model;
mod spec;
mod train;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use gradcheck::{
    grad_check, grad_check_preset, grad_check_report, preset_check_shape, GradCheckReport,
    LayerGradError,
};
pub use model::{forward_probs, init_random, NetworkModel};
pub use spec::{Activation, Layer, NetworkSpec, PRESETS};
pub use train::{evaluate, mean_loss, predict_probs, train, TrainConfig};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("unknown preset `{0}` (expected one of: mlp-small, cnn-small)")]
    UnknownPreset(String),
    #[error("input shape mismatch: expected {expected} features per sample, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, spec needs {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("cannot train on an empty labeled set")]
    EmptyTrainingSet,
    #[error("cannot evaluate on an empty test set")]
    EmptyTestSet,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite training loss in epoch {epoch}; learning rate too high?")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
