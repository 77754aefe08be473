use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{cross_entropy, NetworkModel};
use super::{init_random, NetworkSpec, NnError};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradError {
    pub layer: usize,
    pub description: String,
    pub params: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub layers: Vec<LayerGradError>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.max_relative_error)
            .fold(0.0, f64::max)
    }

    /// The layer with the largest error, if any layer has parameters.
    pub fn worst(&self) -> Option<&LayerGradError> {
        self.layers
            .iter()
            .max_by(|a, b| a.max_relative_error.total_cmp(&b.max_relative_error))
    }
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Analytic vs central-difference gradients of the cross-entropy of one
/// sample, broken down by parameterised layer.
pub fn grad_check_report(
    model: &NetworkModel,
    features: &[f64],
    label: usize,
    epsilon: f64,
) -> Result<GradCheckReport, NnError> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(NnError::InvalidConfig(format!(
            "epsilon must lie in (0, 1e-2], got {epsilon}"
        )));
    }
    model.check()?;
    let input = Array2::from_shape_vec((1, features.len()), features.to_vec())
        .expect("one row of features");
    let labels = [label];
    let mut analytic = vec![0.0; model.params.len()];
    model.loss_and_grad(input.clone(), &labels, &mut analytic)?;

    let mut probe = model.clone();
    let mut loss_at = |i: usize, value: f64| -> Result<f64, NnError> {
        probe.params[i] = value;
        let trace = probe.forward_trace(input.clone())?;
        cross_entropy(trace.logits().view(), &labels)
    };

    let mut layers = Vec::new();
    let offsets = model.offsets();
    for (li, layer) in model.spec.layers.iter().enumerate() {
        let count = layer.param_count();
        if count == 0 {
            continue;
        }
        let mut worst: f64 = 0.0;
        for i in offsets[li]..offsets[li] + count {
            let w = model.params[i];
            let plus = loss_at(i, w + epsilon)?;
            let minus = loss_at(i, w - epsilon)?;
            loss_at(i, w)?;
            let numeric = (plus - minus) / (2.0 * epsilon);
            worst = worst.max(relative_error(analytic[i], numeric));
        }
        layers.push(LayerGradError {
            layer: li,
            description: layer.describe(),
            params: count,
            max_relative_error: worst,
        });
    }
    Ok(GradCheckReport { layers })
}

/// Largest relative error over all parameters, where the error of one
/// parameter is `|g_a - g_n| / max(|g_a|, |g_n|, 1e-8)`.
pub fn grad_check(
    model: &NetworkModel,
    features: &[f64],
    label: usize,
    epsilon: f64,
) -> Result<f64, NnError> {
    Ok(grad_check_report(model, features, label, epsilon)?.max_relative_error())
}

/// Per-sample input shape used when checking a named preset.
pub fn preset_check_shape(preset: &str) -> &'static [usize] {
    match preset {
        "cnn-small" => &[2, 7, 7],
        _ => &[12],
    }
}

/// Gradient check of a named preset over `samples` random inputs; the
/// report keeps the worst error seen for each layer.
pub fn grad_check_preset(
    preset: &str,
    classes: usize,
    seed: u64,
    samples: usize,
    epsilon: f64,
) -> Result<GradCheckReport, NnError> {
    let spec = NetworkSpec::preset(preset, preset_check_shape(preset), classes)?;
    let model = init_random(&spec, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9c);
    let mut merged: Option<GradCheckReport> = None;
    for s in 0..samples {
        let x: Vec<f64> = (0..spec.input_len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let report = grad_check_report(&model, &x, s % classes, epsilon)?;
        merged = Some(match merged {
            None => report,
            Some(mut acc) => {
                for (a, b) in acc.layers.iter_mut().zip(report.layers) {
                    a.max_relative_error = a.max_relative_error.max(b.max_relative_error);
                }
                acc
            }
        });
    }
    merged.ok_or_else(|| NnError::InvalidConfig("need at least one sample".into()))
}
