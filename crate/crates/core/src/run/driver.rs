use std::time::Instant;

use log::debug;

use super::config::{DataSource, Mode, RunConfig, ScoringModel};
use super::report::{IterationRecord, ReplicateReport, RunReport};
use super::seeds::{self, SeedSet};
use super::RunError;
use crate::acquisition::{select_batch, select_random, Phase, SelectionBatch};
use crate::datasets::{load_cifar10, load_idx, make_imbalanced, synth_blobs, Dataset, Split};
use crate::nn::{evaluate, init_random, predict_probs, train, NetworkModel, NetworkSpec, TrainConfig};
use crate::pool::{Oracle, PoolState};

/// Loaded train/test data and the network spec built for them.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub spec: NetworkSpec,
}

/// Load (or generate) the data named by `cfg` and build the network spec.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared, RunError> {
    cfg.validate()?;
    let (mut train, test) = match &cfg.dataset {
        DataSource::Synth { .. } => synth_blobs(&cfg.dataset.synth_spec(cfg.seed).unwrap())?,
        DataSource::Cifar10 { path } => load_cifar10(path)?,
        DataSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => {
            let train = load_idx(train_images, train_labels, Split::Train)?;
            let mut test = load_idx(test_images, test_labels, Split::Test)?;
            test.classes = test.classes.max(train.classes);
            (train, test)
        }
    };
    if let Some(spec) = &cfg.imbalance {
        train = make_imbalanced(&train, spec, seeds::imbalance_seed(cfg.seed))?;
    }
    if train.sample_shape != test.sample_shape || train.classes < test.classes {
        return Err(RunError::Config(format!(
            "train/test mismatch: shapes {:?} vs {:?}, classes {} vs {}",
            train.sample_shape, test.sample_shape, train.classes, test.classes
        )));
    }
    let spec = NetworkSpec::preset(&cfg.model, &train.sample_shape, train.classes)
        .map_err(|e| RunError::Config(e.to_string()))?;
    Ok(Prepared { train, test, spec })
}

struct Loop<'a> {
    cfg: &'a RunConfig,
    data: &'a Prepared,
    seeds: SeedSet,
    pool: PoolState,
    oracle: Oracle,
    records: Vec<IterationRecord>,
}

impl<'a> Loop<'a> {
    fn new(cfg: &'a RunConfig, data: &'a Prepared, replicate: usize) -> Result<Self, RunError> {
        Ok(Self {
            cfg,
            data,
            seeds: SeedSet::for_replicate(cfg.seed, replicate),
            pool: PoolState::new(data.train.len())?,
            oracle: Oracle::new(data.train.labels.clone(), cfg.budget.total),
            records: Vec::new(),
        })
    }

    fn next_size(&self) -> usize {
        self.cfg.budget.batch_size(
            self.pool.iteration(),
            self.oracle.remaining_budget(),
            self.pool.unlabeled().len(),
        )
    }

    fn train_cfg(&self, iteration: usize) -> TrainConfig {
        TrainConfig {
            shuffle_seed: self.seeds.shuffle_at(iteration),
            ..self.cfg.train.clone()
        }
    }

    /// Pick `k` ids from the unlabeled pool under `phase`.
    fn select(
        &self,
        phase: Phase,
        scorer: &NetworkModel,
        k: usize,
        iteration: usize,
    ) -> Result<SelectionBatch, RunError> {
        let ids = self.pool.unlabeled_ids();
        let seed = self.seeds.selection_at(iteration);
        let batch = if phase == Phase::Random {
            select_random(&ids, k, seed)
        } else {
            let probs = predict_probs(scorer, &self.data.train, &ids)?;
            let scored: Vec<_> = ids.into_iter().zip(probs).collect();
            select_batch(phase, &scored, k, seed)
        };
        Ok(batch.tagged(iteration, phase))
    }

    fn train_labeled(&self, model: &NetworkModel, iteration: usize) -> Result<NetworkModel, RunError> {
        let labeled = self.pool.labeled_ids();
        Ok(train(model, &self.data.train, &labeled, &self.train_cfg(iteration))?)
    }

    /// One select -> label -> train step; returns the new model.
    fn step(&mut self, model: &NetworkModel, scorer: &NetworkModel, k: usize) -> Result<NetworkModel, RunError> {
        let i = self.pool.iteration();
        let phase = self.cfg.strategy.phase_for(i);
        let t0 = Instant::now();
        let batch = self.select(phase, scorer, k, i)?;
        let selection_secs = t0.elapsed().as_secs_f64();
        self.pool.commit_batch(batch, &mut self.oracle)?;
        let t1 = Instant::now();
        let next = self.train_labeled(model, i)?;
        let training_secs = t1.elapsed().as_secs_f64();
        let accuracy = evaluate(&next, &self.data.test)?;
        self.record(i, phase, k, selection_secs, training_secs, accuracy);
        Ok(next)
    }

    fn record(&mut self, iteration: usize, phase: Phase, selected: usize, sel: f64, tr: f64, accuracy: f64) {
        debug!(
            "{} iter {iteration} {phase} +{selected} labels={} acc={accuracy:.4}",
            self.cfg.method_label(),
            self.oracle.issued()
        );
        self.records.push(IterationRecord {
            iteration,
            phase,
            selected,
            labels_used: self.oracle.issued(),
            selection_secs: sel,
            training_secs: tr,
            accuracy,
        });
    }

    fn finish(self, replicate: usize, candidate_training_secs: Option<f64>) -> ReplicateReport {
        let annotation_sim_time_secs = self
            .records
            .iter()
            .map(|r| r.selection_secs + r.training_secs)
            .sum();
        ReplicateReport {
            replicate,
            seed: self.seeds.base,
            final_accuracy: self.records.last().map_or(0.0, |r| r.accuracy),
            history: self.pool.history_records(),
            iterations: self.records,
            candidate_training_secs,
            annotation_sim_time_secs,
        }
    }
}

/// Candidate-free loop: the first batch is chosen by a randomly
/// initialised network; no training happens before that selection.
fn replicate_candidate_free(cfg: &RunConfig, data: &Prepared, replicate: usize) -> Result<ReplicateReport, RunError> {
    let mut run = Loop::new(cfg, data, replicate)?;
    let mut model = init_random(&data.spec, run.seeds.init)?;
    loop {
        let k = run.next_size();
        if k == 0 {
            break;
        }
        model = run.step(&model, &model, k)?;
    }
    Ok(run.finish(replicate, None))
}

/// Candidate loop: a uniformly random initial batch trains the candidate
/// model (timed separately), which then drives the remaining iterations.
fn replicate_candidate(cfg: &RunConfig, data: &Prepared, replicate: usize) -> Result<ReplicateReport, RunError> {
    let mut run = Loop::new(cfg, data, replicate)?;
    let k0 = run.next_size();
    let t0 = Instant::now();
    let initial = select_random(&run.pool.unlabeled_ids(), k0, run.seeds.selection_at(0)).tagged(0, Phase::Random);
    let selection_secs = t0.elapsed().as_secs_f64();
    run.pool.commit_batch(initial, &mut run.oracle)?;

    let t1 = Instant::now();
    let candidate = run.train_labeled(&init_random(&data.spec, run.seeds.init)?, 0)?;
    let candidate_secs = t1.elapsed().as_secs_f64();
    let accuracy = evaluate(&candidate, &data.test)?;
    // the candidate's training is reported as candidate time, not as
    // iteration time
    run.record(0, Phase::Random, k0, selection_secs, 0.0, accuracy);

    let mut model = candidate.clone();
    loop {
        let k = run.next_size();
        if k == 0 {
            break;
        }
        let scorer = match cfg.scoring {
            ScoringModel::Latest => model.clone(),
            ScoringModel::Candidate => candidate.clone(),
        };
        model = run.step(&model, &scorer, k)?;
    }
    Ok(run.finish(replicate, Some(candidate_secs)))
}

/// One replicate of `cfg` in its configured mode.
pub fn run_replicate(cfg: &RunConfig, data: &Prepared, replicate: usize) -> Result<ReplicateReport, RunError> {
    match cfg.mode {
        Mode::CandidateFree => replicate_candidate_free(cfg, data, replicate),
        Mode::Candidate => replicate_candidate(cfg, data, replicate),
    }
}

fn run_all(cfg: &RunConfig, data: &Prepared) -> Result<RunReport, RunError> {
    let cfg = cfg.clone().materialize();
    let reps = (0..cfg.replicates)
        .map(|r| run_replicate(&cfg, data, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunReport::from_replicates(cfg, reps))
}

pub fn run_candidate_free(cfg: &RunConfig, data: &Prepared) -> Result<RunReport, RunError> {
    if cfg.mode != Mode::CandidateFree {
        return Err(RunError::Config("run_candidate_free needs mode = candidate-free".into()));
    }
    run_all(cfg, data)
}

pub fn run_candidate(cfg: &RunConfig, data: &Prepared) -> Result<RunReport, RunError> {
    if cfg.mode != Mode::Candidate {
        return Err(RunError::Config("run_candidate needs mode = candidate".into()));
    }
    run_all(cfg, data)
}

/// Prepare the data and run every replicate sequentially.
pub fn run(cfg: &RunConfig) -> Result<RunReport, RunError> {
    let data = prepare(cfg)?;
    run_all(cfg, &data)
}
