//! Pool-based active learning without a candidate model.
//!
//! The engine scores an unlabeled pool with a network's class
//! probabilities, picks the next annotation batch with a confidence-based
//! acquisition rule, labels it from ground truth, retrains, and repeats until
//! the label budget is spent. The first batch can be chosen by a randomly
//! initialised network ([`run::Mode::CandidateFree`]) or, as in conventional
//! pipelines, by a candidate model trained on a random initial batch
//! ([`run::Mode::Candidate`]).

pub mod acquisition;
pub mod datasets;
pub mod experiment;
pub mod nn;
pub mod pool;
pub mod run;

pub use acquisition::{
    score_hc, score_lc, select_random, select_top, ClassProbabilities, ConfidenceScore, Phase,
    SelectionBatch, Strategy,
};
pub use datasets::{Dataset, Split};
pub use experiment::{ExperimentFile, Overrides};
pub use nn::{NetworkModel, NetworkSpec, TrainConfig};
pub use pool::{BudgetSchedule, Oracle, PoolState};
pub use run::{Mode, RunConfig, RunError, RunReport};
