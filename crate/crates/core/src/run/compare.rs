use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::Mode;
use super::report::RunReport;
use super::RunError;

pub const COMPARISON_HEADER: [&str; 6] = [
    "method",
    "candidate_used",
    "time_saved_h",
    "annotation_sim_time_h",
    "accuracy_mean",
    "accuracy_std",
];

/// One row of a method comparison table. Accuracies are fractions in
/// `[0, 1]`; `accuracy_std` is empty for single-replicate runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub candidate_used: bool,
    pub time_saved_h: f64,
    pub annotation_sim_time_h: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: Option<f64>,
}

impl ComparisonRow {
    pub fn from_report(report: &RunReport, time_saved_h: f64) -> Self {
        Self {
            method: report.method_label(),
            candidate_used: report.config.mode == Mode::Candidate,
            time_saved_h,
            annotation_sim_time_h: report.annotation_sim_time_h,
            accuracy_mean: report.final_accuracy_mean,
            accuracy_std: report.final_accuracy_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Candidate-training time the first run did not spend.
    pub time_saved_h: f64,
    /// First run's final accuracy minus the second's.
    pub accuracy_delta: f64,
    pub rows: Vec<ComparisonRow>,
}

/// Compare a run against a reference run on the same data, network and
/// budget. The first run is credited with the reference's candidate
/// training time (zero when the reference is candidate-free too).
pub fn compare(free: &RunReport, reference: &RunReport) -> Result<Comparison, RunError> {
    let (a, b) = (&free.config, &reference.config);
    let mut diffs = Vec::new();
    if a.dataset != b.dataset || a.imbalance != b.imbalance {
        diffs.push("dataset");
    }
    if a.model != b.model {
        diffs.push("model");
    }
    if a.budget != b.budget {
        diffs.push("budget");
    }
    if !diffs.is_empty() {
        return Err(RunError::Incompatible(format!("reports differ in {}", diffs.join(", "))));
    }
    let time_saved_h = reference.candidate_training_h.unwrap_or(0.0);
    Ok(Comparison {
        time_saved_h,
        accuracy_delta: free.final_accuracy_mean - reference.final_accuracy_mean,
        rows: vec![
            ComparisonRow::from_report(free, time_saved_h),
            ComparisonRow::from_report(reference, 0.0),
        ],
    })
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.candidate_used.to_string(),
            r.time_saved_h.to_string(),
            r.annotation_sim_time_h.to_string(),
            r.accuracy_mean.to_string(),
            r.accuracy_std.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
