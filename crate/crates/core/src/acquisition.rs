//! Confidence scoring and batch selection.
//!
//! Two acquisition functions are provided, both derived from the largest
//! entry of a predicted class distribution:
//!
//! - high confidence: `max_k P(y = k | x)`
//! - low confidence: `1 - max_k P(y = k | x)`
//!
//! A [`Strategy`] decides which of them (or a uniform random draw) is used at
//! each active-learning iteration.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on the sum of a probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcquisitionError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("confidence score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

/// A predicted distribution over `K >= 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilities(Vec<f64>);

impl ClassProbabilities {
    pub fn new(values: Vec<f64>) -> Result<Self, AcquisitionError> {
        if values.len() < 2 {
            return Err(AcquisitionError::InvalidDistribution(format!(
                "need at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(AcquisitionError::InvalidDistribution(format!(
                "entry {v} outside [0, 1]"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(AcquisitionError::InvalidDistribution(format!(
                "entries sum to {sum}"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(classes: usize) -> Result<Self, AcquisitionError> {
        Self::new(vec![1.0 / classes as f64; classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest entry, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A selection priority in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConfidenceScore(f64);

impl ConfidenceScore {
    pub fn new(value: f64) -> Result<Self, AcquisitionError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(AcquisitionError::ScoreOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ConfidenceScore {
    type Error = AcquisitionError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ConfidenceScore> for f64 {
    fn from(s: ConfidenceScore) -> f64 {
        s.0
    }
}

/// High-confidence score: the maximum predicted probability.
pub fn score_hc(p: &ClassProbabilities) -> ConfidenceScore {
    ConfidenceScore(p.max())
}

/// Low-confidence score: one minus the maximum predicted probability.
pub fn score_lc(p: &ClassProbabilities) -> ConfidenceScore {
    ConfidenceScore(1.0 - p.max())
}

/// Scoring mode applied at a single iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    High,
    Low,
    Random,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::High => "HIGH",
            Phase::Low => "LOW",
            Phase::Random => "RANDOM",
        })
    }
}

/// Which acquisition rule applies at each iteration.
///
/// | strategy | iteration 0 | iterations >= 1 |
/// |----------|-------------|-----------------|
/// | HC       | HIGH        | HIGH            |
/// | LC       | LOW         | LOW             |
/// | HCLC     | HIGH        | LOW             |
/// | LCHC     | LOW         | HIGH            |
/// | RHC      | RANDOM      | HIGH            |
/// | RLC      | RANDOM      | LOW             |
/// | HLH      | HIGH        | LOW on odd, HIGH on even iterations |
/// | RANDOM   | RANDOM      | RANDOM          |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    Hc,
    Lc,
    Hclc,
    Lchc,
    Rhc,
    Rlc,
    Hlh,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Lchc,
        Strategy::Hlh,
        Strategy::Rhc,
        Strategy::Rlc,
        Strategy::Hc,
        Strategy::Lc,
        Strategy::Hclc,
        Strategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Hc => "HC",
            Strategy::Lc => "LC",
            Strategy::Hclc => "HCLC",
            Strategy::Lchc => "LCHC",
            Strategy::Rhc => "RHC",
            Strategy::Rlc => "RLC",
            Strategy::Hlh => "HLH",
            Strategy::Random => "RANDOM",
        }
    }

    /// Scoring mode for `iteration`.
    pub fn phase_for(self, iteration: usize) -> Phase {
        let first = iteration == 0;
        match self {
            Strategy::Hc => Phase::High,
            Strategy::Lc => Phase::Low,
            Strategy::Hclc if first => Phase::High,
            Strategy::Hclc => Phase::Low,
            Strategy::Lchc if first => Phase::Low,
            Strategy::Lchc => Phase::High,
            Strategy::Rhc if first => Phase::Random,
            Strategy::Rhc => Phase::High,
            Strategy::Rlc if first => Phase::Random,
            Strategy::Rlc => Phase::Low,
            Strategy::Hlh if iteration.is_multiple_of(2) => Phase::High,
            Strategy::Hlh => Phase::Low,
            Strategy::Random => Phase::Random,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = AcquisitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AcquisitionError::UnknownStrategy(s.to_string()))
    }
}

impl TryFrom<String> for Strategy {
    type Error = AcquisitionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.name().to_string()
    }
}

/// A batch of sample ids picked at one iteration.
///
/// `scores` is parallel to `ids` for score-ranked batches and empty for
/// uniform random draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionBatch {
    pub iteration: usize,
    pub phase: Option<Phase>,
    pub ids: Vec<usize>,
    pub scores: Vec<ConfidenceScore>,
}

impl SelectionBatch {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn tagged(mut self, iteration: usize, phase: Phase) -> Self {
        self.iteration = iteration;
        self.phase = Some(phase);
        self
    }
}

/// Descending score, then ascending id.
fn rank_order(a: &(usize, ConfidenceScore), b: &(usize, ConfidenceScore)) -> Ordering {
    b.1 .0.total_cmp(&a.1 .0).then(a.0.cmp(&b.0))
}

/// The `k` highest-scoring ids, ties broken by ascending id.
///
/// Returns every id (in rank order) when `k >= scores.len()`.
pub fn select_top(scores: &[(usize, ConfidenceScore)], k: usize) -> SelectionBatch {
    let mut ranked = scores.to_vec();
    let k = k.min(ranked.len());
    if k == 0 {
        ranked.clear();
    } else if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, rank_order);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(rank_order);
    let (ids, scores) = ranked.into_iter().unzip();
    SelectionBatch {
        iteration: 0,
        phase: None,
        ids,
        scores,
    }
}

/// `k` distinct ids drawn uniformly without replacement from `pool`.
///
/// The result depends only on `pool` (in the order given), `k`, and `seed`.
pub fn select_random(pool: &[usize], k: usize, seed: u64) -> SelectionBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = k.min(pool.len());
    let ids = rand::seq::index::sample(&mut rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    SelectionBatch {
        iteration: 0,
        phase: Some(Phase::Random),
        ids,
        scores: Vec::new(),
    }
}

/// Score every `(id, distribution)` pair under `phase` and pick `k` ids.
///
/// `Phase::Random` ignores the distributions and draws with `seed`.
pub fn select_batch(
    phase: Phase,
    candidates: &[(usize, ClassProbabilities)],
    k: usize,
    seed: u64,
) -> SelectionBatch {
    let batch = match phase {
        Phase::Random => {
            let ids: Vec<usize> = candidates.iter().map(|(id, _)| *id).collect();
            select_random(&ids, k, seed)
        }
        Phase::High | Phase::Low => {
            let score = if phase == Phase::High { score_hc } else { score_lc };
            let scored: Vec<_> = candidates.iter().map(|(id, p)| (*id, score(p))).collect();
            select_top(&scored, k)
        }
    };
    SelectionBatch {
        phase: Some(phase),
        ..batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(v: &[f64]) -> ClassProbabilities {
        ClassProbabilities::new(v.to_vec()).unwrap()
    }

    fn sc(v: f64) -> ConfidenceScore {
        ConfidenceScore::new(v).unwrap()
    }

    #[test]
    fn hc_and_lc_examples() {
        let p = probs(&[0.1, 0.7, 0.2]);
        assert_eq!(score_hc(&p).value(), 0.7);
        assert!((score_lc(&p).value() - 0.3).abs() < 1e-15);

        let u = ClassProbabilities::uniform(10).unwrap();
        assert!((score_hc(&u).value() - 0.1).abs() < 1e-15);
        assert!((score_lc(&u).value() - 0.9).abs() < 1e-15);

        let one_hot = probs(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(score_hc(&one_hot).value(), 1.0);
        assert_eq!(score_lc(&one_hot).value(), 0.0);
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(ClassProbabilities::new(vec![1.0]).is_err());
        assert!(ClassProbabilities::new(vec![0.5, 0.6]).is_err());
        assert!(ClassProbabilities::new(vec![-0.1, 1.1]).is_err());
        assert!(ClassProbabilities::new(vec![f64::NAN, 1.0]).is_err());
        assert!(ClassProbabilities::new(vec![0.5, 0.5 + 5e-7]).is_ok());
    }

    #[test]
    fn top_breaks_ties_by_lower_id() {
        let scores = [(0, sc(0.2)), (1, sc(0.9)), (2, sc(0.9)), (3, sc(0.1))];
        assert_eq!(select_top(&scores, 2).ids, vec![1, 2]);
        let scores = [(5, sc(0.5)), (2, sc(0.5)), (9, sc(0.5))];
        assert_eq!(select_top(&scores, 1).ids, vec![2]);
    }

    #[test]
    fn top_with_k_at_or_above_len_returns_all() {
        let scores = [(0, sc(0.2)), (1, sc(0.9)), (2, sc(0.4))];
        assert_eq!(select_top(&scores, 3).ids, vec![1, 2, 0]);
        assert_eq!(select_top(&scores, 10).ids, vec![1, 2, 0]);
        let batch = select_top(&scores, 2);
        assert_eq!(batch.scores, vec![sc(0.9), sc(0.4)]);
    }

    #[test]
    fn random_draw_is_exhaustive_and_deterministic() {
        let pool: Vec<usize> = (0..10).collect();
        let mut ids = select_random(&pool, 10, 3).ids;
        ids.sort_unstable();
        assert_eq!(ids, pool);

        let pool: Vec<usize> = (0..1000).collect();
        let a = select_random(&pool, 100, 42);
        let b = select_random(&pool, 100, 42);
        assert_eq!(a, b);
        assert_ne!(a.ids, select_random(&pool, 100, 43).ids);
        let mut dedup = a.ids.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 100);
    }

    #[test]
    fn phase_rules() {
        assert_eq!(Strategy::Hclc.phase_for(0), Phase::High);
        assert_eq!(Strategy::Hclc.phase_for(3), Phase::Low);
        for i in 0..5 {
            assert_eq!(Strategy::Lc.phase_for(i), Phase::Low);
            assert_eq!(Strategy::Hc.phase_for(i), Phase::High);
            assert_eq!(Strategy::Random.phase_for(i), Phase::Random);
        }
        assert_eq!(Strategy::Lchc.phase_for(0), Phase::Low);
        assert_eq!(Strategy::Lchc.phase_for(1), Phase::High);
        assert_eq!(Strategy::Rhc.phase_for(0), Phase::Random);
        assert_eq!(Strategy::Rhc.phase_for(2), Phase::High);
        assert_eq!(Strategy::Rlc.phase_for(0), Phase::Random);
        assert_eq!(Strategy::Rlc.phase_for(2), Phase::Low);
        let hlh: Vec<_> = (0..4).map(|i| Strategy::Hlh.phase_for(i)).collect();
        assert_eq!(hlh, [Phase::High, Phase::Low, Phase::High, Phase::Low]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("hclc".parse::<Strategy>().unwrap(), Strategy::Hclc);
        assert!("XYZ".parse::<Strategy>().is_err());
    }

    #[test]
    fn select_batch_tags_phase() {
        let cands = vec![
            (4, probs(&[0.9, 0.1])),
            (7, probs(&[0.6, 0.4])),
            (8, probs(&[0.5, 0.5])),
        ];
        let high = select_batch(Phase::High, &cands, 1, 0);
        assert_eq!(high.ids, vec![4]);
        assert_eq!(high.phase, Some(Phase::High));
        let low = select_batch(Phase::Low, &cands, 2, 0);
        assert_eq!(low.ids, vec![8, 7]);
        let rand = select_batch(Phase::Random, &cands, 2, 0);
        assert_eq!(rand.len(), 2);
        assert!(rand.scores.is_empty());
    }
}
