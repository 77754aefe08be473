use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Split};

/// Seed for class directions when there are more classes than dimensions.
const DIRECTION_SEED: u64 = 0x5eed_d1a6;

/// Isotropic Gaussian blobs, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

/// Record written next to generated synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    #[serde(flatten)]
    pub spec: SynthSpec,
    pub train_samples: usize,
    pub test_samples: usize,
    pub directions: String,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.classes < 2 || self.dim < 2 {
            return Err(DatasetError::Invalid(format!(
                "synthetic data needs K >= 2 and dim >= 2 (got K={}, dim={})",
                self.classes, self.dim
            )));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(DatasetError::Invalid(format!(
                "separation must be finite and non-negative, got {}",
                self.separation
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(DatasetError::Invalid(format!("noise must be >= 0, got {}", self.noise)));
        }
        if self.per_class < 2 {
            return Err(DatasetError::Invalid("need at least 2 samples per class".into()));
        }
        Ok(())
    }

    /// Training samples per class (80% of `per_class`, rounded).
    pub fn train_per_class(&self) -> usize {
        ((self.per_class as f64) * 0.8).round() as usize
    }

    pub fn manifest(&self) -> SynthManifest {
        let train = self.train_per_class();
        SynthManifest {
            spec: self.clone(),
            train_samples: train * self.classes,
            test_samples: (self.per_class - train) * self.classes,
            directions: if self.classes <= self.dim {
                "standard basis e_c".into()
            } else {
                format!("gaussian unit vectors, seed {DIRECTION_SEED:#x}")
            },
        }
    }

    /// Unit direction of each class centre.
    pub fn directions(&self) -> Vec<Vec<f64>> {
        if self.classes <= self.dim {
            return (0..self.classes)
                .map(|c| (0..self.dim).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
        (0..self.classes)
            .map(|_| {
                let v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect()
    }
}

/// Class `c` is drawn from `N(separation * u_c, noise^2 I)`. Each class is
/// split 80/20 into train and test; both splits are shuffled.
pub fn synth_blobs(spec: &SynthSpec) -> Result<(Dataset, Dataset), DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dirs = spec.directions();
    let train_per = spec.train_per_class();
    let mut train: Vec<(usize, Vec<f32>)> = Vec::with_capacity(train_per * spec.classes);
    let mut test = Vec::with_capacity((spec.per_class - train_per) * spec.classes);
    for (c, dir) in dirs.iter().enumerate() {
        for i in 0..spec.per_class {
            let x: Vec<f32> = dir
                .iter()
                .map(|&u| {
                    let z: f64 = rng.sample(StandardNormal);
                    (spec.separation * u + spec.noise * z) as f32
                })
                .collect();
            if i < train_per {
                train.push((c, x));
            } else {
                test.push((c, x));
            }
        }
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    let build = |rows: Vec<(usize, Vec<f32>)>, split| {
        let labels = rows.iter().map(|(c, _)| *c).collect();
        let features = rows.into_iter().flat_map(|(_, x)| x).collect();
        Dataset::new(features, vec![spec.dim], labels, spec.classes, split)
    };
    Ok((build(train, Split::Train)?, build(test, Split::Test)?))
}
