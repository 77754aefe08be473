use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::seeds;
use crate::acquisition::Strategy;
use crate::datasets::{ImbalanceSpec, SynthSpec};
use crate::nn::{TrainConfig, PRESETS};
use crate::pool::BudgetSchedule;

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Score with a randomly initialised network from the first iteration.
    CandidateFree,
    /// Train a candidate on a random initial batch before any scoring.
    Candidate,
}

/// Which network scores the pool after the first iteration in candidate mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringModel {
    /// The most recently trained model.
    #[default]
    Latest,
    /// The candidate model, frozen for the whole run.
    Candidate,
}

/// Where the train/test data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Synth {
        classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
        noise: f64,
        /// Derived from the master seed when absent.
        #[serde(default)]
        seed: Option<u64>,
    },
    Cifar10 {
        path: PathBuf,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
}

impl DataSource {
    pub fn synth_spec(&self, master_seed: u64) -> Option<SynthSpec> {
        match *self {
            DataSource::Synth {
                classes,
                per_class,
                dim,
                separation,
                noise,
                seed,
            } => Some(SynthSpec {
                classes,
                per_class,
                dim,
                separation,
                noise,
                seed: seed.unwrap_or_else(|| seeds::synth_seed(master_seed)),
            }),
            _ => None,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DataSource,
    #[serde(default)]
    pub imbalance: Option<ImbalanceSpec>,
    pub model: String,
    pub strategy: Strategy,
    pub budget: BudgetSchedule,
    /// `shuffle_seed` is replaced per iteration by the derived seed.
    pub train: TrainConfig,
    pub mode: Mode,
    #[serde(default)]
    pub scoring: ScoringModel,
    pub seed: u64,
    pub replicates: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.replicates == 0 {
            return Err(RunError::Config("replicates must be >= 1".into()));
        }
        if !PRESETS.contains(&self.model.as_str()) {
            return Err(RunError::Config(format!(
                "unknown model preset `{}` (expected one of {})",
                self.model,
                PRESETS.join(", ")
            )));
        }
        self.budget
            .validate()
            .map_err(|e| RunError::Config(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| RunError::Config(e.to_string()))?;
        if let Some(spec) = self.dataset.synth_spec(self.seed) {
            spec.validate().map_err(|e| RunError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Fill in every value that would otherwise be derived implicitly.
    pub fn materialize(mut self) -> Self {
        if let DataSource::Synth { seed, .. } = &mut self.dataset {
            if seed.is_none() {
                *seed = Some(seeds::synth_seed(self.seed));
            }
        }
        self
    }

    /// Short name for tables and curves, e.g. `LC` or `candidate-LC`.
    pub fn method_label(&self) -> String {
        match self.mode {
            Mode::CandidateFree => self.strategy.name().to_string(),
            Mode::Candidate => format!("candidate-{}", self.strategy.name()),
        }
    }
}
