//! The active-learning run driver.
//!
//! A run repeats select -> label -> train until the label budget or the
//! pool is exhausted. In candidate-free mode the very first batch is scored
//! by a randomly initialised network. In candidate mode the first batch is
//! drawn uniformly at random and used to train a candidate model before any
//! scoring happens; that training time is reported separately and is what
//! the candidate-free mode saves.

mod compare;
mod config;
mod curves;
mod driver;
mod report;
pub mod seeds;

use std::path::PathBuf;

use thiserror::Error;

pub use compare::{compare, write_comparison_csv, Comparison, ComparisonRow, COMPARISON_HEADER};
pub use config::{DataSource, Mode, RunConfig, ScoringModel};
pub use curves::{curve_points, write_curves_csv, CurvePoint, CURVE_HEADER};
pub use driver::{prepare, run, run_candidate, run_candidate_free, run_replicate, Prepared};
pub use report::{mean_std, IterationRecord, Metadata, ReplicateReport, RunReport, SECS_PER_HOUR};

use crate::datasets::DatasetError;
use crate::nn::NnError;
use crate::pool::PoolError;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("incompatible reports: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration problems map to exit code 2, everything else to 1.
    pub fn is_config(&self) -> bool {
        matches!(self, RunError::Config(_))
    }
}
