use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{cross_entropy, forward_probs, init_random, NetworkModel};
use super::NnError;
use crate::acquisition::{argmax, ClassProbabilities};
use crate::datasets::Dataset;

/// Rows per forward pass when scoring or evaluating.
const EVAL_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Continue from the incoming model; when false the model is
    /// re-initialised from its own `init_seed` before training.
    pub warm_start: bool,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 64,
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 5e-4,
            warm_start: true,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        // lr = 0 is allowed: it leaves the parameters untouched
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be finite and >= 0");
        }
        Ok(())
    }
}

fn check_labels(model: &NetworkModel, data: &Dataset, ids: &[usize]) -> Result<(), NnError> {
    let classes = model.classes();
    match ids.iter().map(|&i| data.labels[i]).find(|&l| l >= classes) {
        Some(label) => Err(NnError::LabelOutOfRange { label, classes }),
        None => Ok(()),
    }
}

/// Mini-batch SGD with momentum on the mean cross-entropy of `ids`.
///
/// Update per step: `v = momentum * v + (g + weight_decay * w)`, then
/// `w -= learning_rate * v`.
pub fn train(
    model: &NetworkModel,
    data: &Dataset,
    ids: &[usize],
    cfg: &TrainConfig,
) -> Result<NetworkModel, NnError> {
    cfg.validate()?;
    if ids.is_empty() {
        return Err(NnError::EmptyTrainingSet);
    }
    model.check()?;
    check_labels(model, data, ids)?;
    let expected = model.spec.input_len();
    if data.sample_len() != expected {
        return Err(NnError::ShapeMismatch {
            expected,
            got: data.sample_len(),
        });
    }

    let mut model = if cfg.warm_start {
        model.clone()
    } else {
        init_random(&model.spec, model.init_seed)?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order = ids.to_vec();
    let mut grad = vec![0.0; model.params.len()];
    let mut velocity = vec![0.0; model.params.len()];
    let mut labels = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            labels.clear();
            labels.extend(batch.iter().map(|&i| data.labels[i]));
            let loss = model.loss_and_grad(data.gather(batch), &labels, &mut grad)?;
            if !loss.is_finite() {
                return Err(NnError::NonFiniteLoss { epoch });
            }
            for ((w, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v + (g + cfg.weight_decay * *w);
                *w -= cfg.learning_rate * *v;
            }
        }
        if model.params.iter().any(|w| !w.is_finite()) {
            return Err(NnError::NonFiniteLoss { epoch });
        }
    }
    Ok(model)
}

/// Class distributions for `ids`, in the order given.
pub fn predict_probs(
    model: &NetworkModel,
    data: &Dataset,
    ids: &[usize],
) -> Result<Vec<ClassProbabilities>, NnError> {
    let mut out = Vec::with_capacity(ids.len());
    for chunk in ids.chunks(EVAL_CHUNK) {
        out.extend(forward_probs(model, data.gather(chunk).view())?);
    }
    Ok(out)
}

/// Mean cross-entropy over `ids`.
pub fn mean_loss(model: &NetworkModel, data: &Dataset, ids: &[usize]) -> Result<f64, NnError> {
    if ids.is_empty() {
        return Err(NnError::EmptyTrainingSet);
    }
    check_labels(model, data, ids)?;
    let mut total = 0.0;
    for chunk in ids.chunks(EVAL_CHUNK) {
        let trace = model.forward_trace(data.gather(chunk))?;
        let labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
        total += cross_entropy(trace.logits().view(), &labels)? * chunk.len() as f64;
    }
    Ok(total / ids.len() as f64)
}

/// Fraction of samples whose argmax prediction (lowest class on ties)
/// equals the label.
pub fn evaluate(model: &NetworkModel, data: &Dataset) -> Result<f64, NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyTestSet);
    }
    let ids: Vec<usize> = (0..data.len()).collect();
    let probs = predict_probs(model, data, &ids)?;
    let correct = probs
        .iter()
        .zip(&data.labels)
        .filter(|(p, &y)| argmax(p.as_slice()) == y)
        .count();
    Ok(correct as f64 / data.len() as f64)
}
