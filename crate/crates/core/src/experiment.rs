//! TOML experiment files.
//!
//! ```toml
//! seed = 0
//! replicates = 3
//! mode = "candidate-free"      # or "candidate"
//! strategy = "LC"
//! strategies = ["HC", "LC"]    # sweep list for `ablate`; all eight if absent
//! model = "mlp-small"
//!
//! [dataset]
//! kind = "synth"
//! classes = 10
//! per_class = 2500
//! dim = 32
//! separation = 3.0
//! noise = 1.0
//!
//! [budget]
//! initial = 2000
//! step = 1000
//! total = 10000
//!
//! [train]
//! epochs = 5
//! ```
//!
//! Unknown keys are rejected. Omitted values take the defaults shown by
//! [`ExperimentFile::run_config`], which writes them all out explicitly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acquisition::Strategy;
use crate::datasets::ImbalanceSpec;
use crate::nn::TrainConfig;
use crate::pool::BudgetSchedule;
use crate::run::{DataSource, Mode, RunConfig, RunError, ScoringModel};

fn default_model() -> String {
    "mlp-small".into()
}

fn default_strategy() -> Strategy {
    Strategy::Lc
}

fn default_mode() -> Mode {
    Mode::CandidateFree
}

fn default_replicates() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub dataset: DataSource,
    #[serde(default)]
    pub imbalance: Option<ImbalanceSpec>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    pub budget: BudgetSchedule,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub scoring: ScoringModel,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

/// Command-line overrides applied on top of a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub strategy: Option<Strategy>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub mode: Option<Mode>,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The fully materialised config for `strategy` (or the file's own).
    pub fn run_config(&self, overrides: &Overrides) -> Result<RunConfig, RunError> {
        let cfg = RunConfig {
            dataset: self.dataset.clone(),
            imbalance: self.imbalance.clone(),
            model: self.model.clone(),
            strategy: overrides.strategy.unwrap_or(self.strategy),
            budget: self.budget,
            train: self.train.clone(),
            mode: overrides.mode.unwrap_or(self.mode),
            scoring: self.scoring,
            seed: overrides.seed.unwrap_or(self.seed),
            replicates: overrides.replicates.unwrap_or(self.replicates),
        }
        .materialize();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Strategies for a sweep: the file's list, or all eight.
    pub fn sweep(&self) -> Vec<Strategy> {
        if self.strategies.is_empty() {
            Strategy::ALL.to_vec()
        } else {
            self.strategies.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [dataset]
        kind = "synth"
        classes = 3
        per_class = 20
        dim = 4
        separation = 2.0
        noise = 0.5

        [budget]
        initial = 10
        step = 5
        total = 20
    "#;

    #[test]
    fn defaults_are_materialised() {
        let file = ExperimentFile::parse(MINIMAL).unwrap();
        let cfg = file.run_config(&Overrides::default()).unwrap();
        assert_eq!(cfg.strategy, Strategy::Lc);
        assert_eq!(cfg.replicates, 3);
        assert_eq!(cfg.mode, Mode::CandidateFree);
        assert_eq!(cfg.train, TrainConfig::default());
        match cfg.dataset {
            DataSource::Synth { seed, .. } => assert!(seed.is_some()),
            _ => panic!("synth expected"),
        }
        assert_eq!(file.sweep().len(), 8);
    }

    #[test]
    fn unknown_keys_are_named() {
        for (text, key) in [
            (format!("bogus = 1\n{MINIMAL}"), "bogus"),
            (MINIMAL.replace("noise = 0.5", "noise = 0.5\nwidth = 3"), "width"),
            (format!("{MINIMAL}\n[train]\nepoch = 3\n"), "epoch"),
        ] {
            let err = ExperimentFile::parse(&text).unwrap_err();
            assert!(err.is_config());
            assert!(err.to_string().contains(key), "{err}");
        }
    }

    #[test]
    fn overrides_apply() {
        let file = ExperimentFile::parse(MINIMAL).unwrap();
        let cfg = file
            .run_config(&Overrides {
                strategy: Some(Strategy::Hclc),
                seed: Some(7),
                replicates: Some(1),
                mode: Some(Mode::Candidate),
            })
            .unwrap();
        assert_eq!((cfg.strategy, cfg.seed, cfg.replicates), (Strategy::Hclc, 7, 1));
        assert_eq!(cfg.mode, Mode::Candidate);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let text = format!("replicates = 0\n{MINIMAL}");
        let file = ExperimentFile::parse(&text).unwrap();
        assert!(file.run_config(&Overrides::default()).unwrap_err().is_config());
        let text = format!("model = \"resnet\"\n{MINIMAL}");
        let file = ExperimentFile::parse(&text).unwrap();
        assert!(file.run_config(&Overrides::default()).unwrap_err().is_config());
        assert!(ExperimentFile::parse("strategy = \"XYZ\"").is_err());
    }
}
