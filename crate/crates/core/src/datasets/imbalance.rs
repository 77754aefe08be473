use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};

/// Down-sample `minority` so that `count(majority) / count(minority) == ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImbalanceSpec {
    pub majority: usize,
    pub minority: usize,
    pub ratio: f64,
}

impl ImbalanceSpec {
    /// Number of minority samples to keep given the source dataset.
    pub fn target_minority(&self, d: &Dataset) -> Result<usize, DatasetError> {
        let bad = |m: String| Err(DatasetError::UnachievableRatio(m));
        if self.majority >= d.classes || self.minority >= d.classes {
            return bad(format!(
                "classes ({}, {}) not in [0, {})",
                self.majority, self.minority, d.classes
            ));
        }
        if self.majority == self.minority {
            return bad("majority and minority are the same class".into());
        }
        if !(self.ratio >= 1.0 && self.ratio.is_finite()) {
            return bad(format!("ratio must be >= 1, got {}", self.ratio));
        }
        let counts = d.class_counts();
        let exact = counts[self.majority] as f64 / self.ratio;
        let target = exact.round() as usize;
        if target == 0 {
            return bad(format!(
                "ratio {} leaves no minority samples (majority has {})",
                self.ratio, counts[self.majority]
            ));
        }
        if target > counts[self.minority] {
            return bad(format!(
                "need {target} minority samples, only {} available",
                counts[self.minority]
            ));
        }
        Ok(target)
    }
}

/// Keep every sample of every class except `spec.minority`, of which a
/// seeded uniform subset survives; the result is shuffled with the same seed.
pub fn make_imbalanced(d: &Dataset, spec: &ImbalanceSpec, seed: u64) -> Result<Dataset, DatasetError> {
    let target = spec.target_minority(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut minority, mut keep): (Vec<usize>, Vec<usize>) =
        (0..d.len()).partition(|&i| d.labels[i] == spec.minority);
    minority.shuffle(&mut rng);
    keep.extend_from_slice(&minority[..target]);
    keep.shuffle(&mut rng);
    Ok(d.subset(&keep))
}
