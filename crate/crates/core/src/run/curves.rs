use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::report::{mean_std, RunReport};
use super::RunError;

pub const CURVE_HEADER: [&str; 4] = ["strategy", "labels_used", "accuracy_mean", "accuracy_std"];

/// Accuracy after `labels_used` labels, aggregated over every replicate of
/// every report sharing the same method label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub strategy: String,
    pub labels_used: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: Option<f64>,
}

/// One point per (method, labels used), sorted by labels used then method.
pub fn curve_points(reports: &[RunReport]) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for report in reports {
        let label = report.method_label();
        for rep in &report.replicates {
            for it in &rep.iterations {
                groups
                    .entry((it.labels_used, label.clone()))
                    .or_default()
                    .push(it.accuracy);
            }
        }
    }
    groups
        .into_iter()
        .map(|((labels_used, strategy), accs)| {
            let (accuracy_mean, accuracy_std) = mean_std(&accs);
            CurvePoint {
                strategy,
                labels_used,
                accuracy_mean,
                accuracy_std,
            }
        })
        .collect()
}

pub fn write_curves_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for p in points {
        w.write_record([
            p.strategy.clone(),
            p.labels_used.to_string(),
            p.accuracy_mean.to_string(),
            p.accuracy_std.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
