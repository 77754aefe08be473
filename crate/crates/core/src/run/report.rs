use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{Mode, RunConfig};
use super::RunError;
use crate::acquisition::Phase;
use crate::pool::HistoryRecord;

pub const SECS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub selected: usize,
    /// Labels consumed so far, including this iteration.
    pub labels_used: usize,
    pub selection_secs: f64,
    pub training_secs: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub replicate: usize,
    pub seed: u64,
    pub iterations: Vec<IterationRecord>,
    pub history: Vec<HistoryRecord>,
    /// Present only in candidate mode.
    pub candidate_training_secs: Option<f64>,
    pub final_accuracy: f64,
    pub annotation_sim_time_secs: f64,
}

impl ReplicateReport {
    pub fn annotation_sim_time_h(&self) -> f64 {
        self.annotation_sim_time_secs / SECS_PER_HOUR
    }

    pub fn selected_ids(&self) -> Vec<Vec<usize>> {
        self.history.iter().map(|h| h.ids.clone()).collect()
    }
}

/// Wall-clock fields vary between otherwise identical runs; the creation
/// timestamp lives here so the rest of the report stays comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub created_unix_secs: u64,
    pub tool_version: String,
}

impl Metadata {
    pub fn now() -> Self {
        Self {
            created_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub replicates: Vec<ReplicateReport>,
    pub final_accuracy_mean: f64,
    /// Sample standard deviation; only with two or more replicates.
    pub final_accuracy_std: Option<f64>,
    /// Mean over replicates of the summed selection + training time.
    pub annotation_sim_time_h: f64,
    /// Mean candidate-training time (candidate mode only).
    pub candidate_training_h: Option<f64>,
    /// Filled in by a comparison against a candidate-mode run.
    pub time_saved_h: Option<f64>,
    pub metadata: Metadata,
}

pub fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() >= 2)
        .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, std)
}

impl RunReport {
    pub fn from_replicates(config: RunConfig, mut replicates: Vec<ReplicateReport>) -> Self {
        replicates.sort_by_key(|r| r.replicate);
        let finals: Vec<f64> = replicates.iter().map(|r| r.final_accuracy).collect();
        let (final_accuracy_mean, final_accuracy_std) = mean_std(&finals);
        let sims: Vec<f64> = replicates.iter().map(|r| r.annotation_sim_time_h()).collect();
        let cands: Vec<f64> = replicates
            .iter()
            .filter_map(|r| r.candidate_training_secs)
            .map(|s| s / SECS_PER_HOUR)
            .collect();
        let candidate_training_h =
            (config.mode == Mode::Candidate && !cands.is_empty()).then(|| mean_std(&cands).0);
        Self {
            config,
            replicates,
            final_accuracy_mean,
            final_accuracy_std,
            annotation_sim_time_h: mean_std(&sims).0,
            candidate_training_h,
            time_saved_h: None,
            metadata: Metadata::now(),
        }
    }

    pub fn method_label(&self) -> String {
        self.config.method_label()
    }

    /// Checks the structural report invariants; returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        if self.replicates.is_empty() {
            return Err("report has no replicates".into());
        }
        for rep in &self.replicates {
            let sum: f64 = rep
                .iterations
                .iter()
                .map(|r| r.selection_secs + r.training_secs)
                .sum();
            let scale = sum.abs().max(f64::MIN_POSITIVE);
            if (rep.annotation_sim_time_secs - sum).abs() > 1e-6 * scale {
                return Err(format!(
                    "replicate {}: annotation time {} != iteration sum {sum}",
                    rep.replicate, rep.annotation_sim_time_secs
                ));
            }
            for r in &rep.iterations {
                if r.selection_secs < 0.0 || r.training_secs < 0.0 {
                    return Err(format!("negative wall time at iteration {}", r.iteration));
                }
                if !(0.0..=1.0).contains(&r.accuracy) {
                    return Err(format!("accuracy {} out of range", r.accuracy));
                }
            }
            if rep.iterations.len() != rep.history.len() {
                return Err("one iteration record per history batch expected".into());
            }
            let mut seen = std::collections::HashSet::new();
            for h in &rep.history {
                for id in &h.ids {
                    if !seen.insert(*id) {
                        return Err(format!("id {id} selected twice"));
                    }
                }
            }
            if seen.len() > self.config.budget.total {
                return Err("labels used exceed the budget".into());
            }
            if (self.config.mode == Mode::Candidate) != rep.candidate_training_secs.is_some() {
                return Err("candidate time present iff candidate mode".into());
            }
        }
        if (self.replicates.len() >= 2) != self.final_accuracy_std.is_some() {
            return Err("std must be reported iff replicates >= 2".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, RunError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), RunError> {
        std::fs::write(path, self.to_json()?).map_err(|e| RunError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
