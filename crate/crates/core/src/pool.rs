//! Labeled/unlabeled bookkeeping and the simulated annotator.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{Phase, SelectionBatch};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoolError {
    #[error("sample {0} is not in the unlabeled pool")]
    DuplicateSelection(usize),
    #[error("budget exhausted: batch of {requested} with {remaining} labels left")]
    BudgetExhausted { requested: usize, remaining: usize },
    #[error("invalid budget schedule: {0}")]
    InvalidSchedule(String),
    #[error("pool must contain at least one sample")]
    EmptyPool,
}

/// Label budget split into an initial batch and equal follow-up batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSchedule {
    pub initial: usize,
    pub step: usize,
    pub total: usize,
}

impl BudgetSchedule {
    /// `initial + rounds * step` labels in total.
    pub fn rounds(initial: usize, step: usize, rounds: usize) -> Self {
        Self {
            initial,
            step,
            total: initial + rounds * step,
        }
    }

    pub fn validate(&self) -> Result<(), PoolError> {
        if self.initial == 0 || self.step == 0 {
            return Err(PoolError::InvalidSchedule("batch sizes must be >= 1".into()));
        }
        if self.total < self.initial {
            return Err(PoolError::InvalidSchedule(format!(
                "total budget {} below initial batch {}",
                self.total, self.initial
            )));
        }
        Ok(())
    }

    /// Size of the batch at `iteration`, truncated to what is left of the
    /// budget and the pool; zero means the loop is over.
    pub fn batch_size(&self, iteration: usize, remaining_budget: usize, unlabeled: usize) -> usize {
        let nominal = if iteration == 0 { self.initial } else { self.step };
        nominal.min(remaining_budget).min(unlabeled)
    }

    /// Batch sizes of a full run over a pool of `pool` samples.
    pub fn plan(&self, pool: usize) -> Vec<usize> {
        let mut sizes = Vec::new();
        let (mut used, mut left) = (0, pool);
        loop {
            let k = self.batch_size(sizes.len(), self.total - used, left);
            if k == 0 {
                return sizes;
            }
            sizes.push(k);
            used += k;
            left -= k;
        }
    }
}

/// Ground-truth lookup that counts the labels it hands out.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    labels: Vec<usize>,
    budget: usize,
    issued: usize,
}

impl Oracle {
    pub fn new(labels: Vec<usize>, budget: usize) -> Self {
        Self {
            labels,
            budget,
            issued: 0,
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn issued(&self) -> usize {
        self.issued
    }

    pub fn remaining_budget(&self) -> usize {
        self.budget - self.issued
    }

    /// Label `ids`, charging one unit of budget each; all or nothing.
    pub fn annotate(&mut self, ids: &[usize]) -> Result<Vec<usize>, PoolError> {
        if ids.len() > self.remaining_budget() {
            return Err(PoolError::BudgetExhausted {
                requested: ids.len(),
                remaining: self.remaining_budget(),
            });
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= self.labels.len()) {
            return Err(PoolError::DuplicateSelection(id));
        }
        self.issued += ids.len();
        Ok(ids.iter().map(|&id| self.labels[id]).collect())
    }
}

/// Disjoint unlabeled/labeled id sets plus the batches that built `labeled`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    unlabeled: BTreeSet<usize>,
    labeled: BTreeSet<usize>,
    history: Vec<SelectionBatch>,
    iteration: usize,
}

/// One line of the JSON-lines history export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub ids: Vec<usize>,
    pub phase: Option<Phase>,
}

impl PoolState {
    pub fn new(size: usize) -> Result<Self, PoolError> {
        if size == 0 {
            return Err(PoolError::EmptyPool);
        }
        Ok(Self {
            unlabeled: (0..size).collect(),
            labeled: BTreeSet::new(),
            history: Vec::new(),
            iteration: 0,
        })
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    pub fn labeled(&self) -> &BTreeSet<usize> {
        &self.labeled
    }

    pub fn unlabeled_ids(&self) -> Vec<usize> {
        self.unlabeled.iter().copied().collect()
    }

    pub fn labeled_ids(&self) -> Vec<usize> {
        self.labeled.iter().copied().collect()
    }

    pub fn history(&self) -> &[SelectionBatch] {
        &self.history
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Move `batch` from unlabeled to labeled after the oracle labels it.
    ///
    /// The batch is stamped with the current iteration. On error neither the
    /// pool nor the oracle is modified.
    pub fn commit_batch(
        &mut self,
        mut batch: SelectionBatch,
        oracle: &mut Oracle,
    ) -> Result<Vec<usize>, PoolError> {
        let mut seen = BTreeSet::new();
        for &id in &batch.ids {
            if !self.unlabeled.contains(&id) || !seen.insert(id) {
                return Err(PoolError::DuplicateSelection(id));
            }
        }
        let labels = oracle.annotate(&batch.ids)?;
        for id in &batch.ids {
            self.unlabeled.remove(id);
            self.labeled.insert(*id);
        }
        batch.iteration = self.iteration;
        self.history.push(batch);
        self.iteration += 1;
        Ok(labels)
    }

    pub fn history_records(&self) -> Vec<HistoryRecord> {
        self.history
            .iter()
            .map(|b| HistoryRecord {
                iteration: b.iteration,
                ids: b.ids.clone(),
                phase: b.phase,
            })
            .collect()
    }

    /// One JSON object per line: `{"iteration", "ids", "phase"}`.
    pub fn write_history_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in self.history_records() {
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
