//! Acceptance criteria AC-1 .. AC-10, one PASS/FAIL line each.
//!
//! Runs with `cargo test -p freestart-core --test acceptance`. The process
//! exits non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use freestart::acquisition::select_batch;
use freestart::datasets::{
    load_idx, read_cifar_batch, read_idx_images, read_idx_labels, write_cifar_batch, write_idx_images,
    write_idx_labels, DatasetError, ImbalanceSpec, CIFAR_RECORD_BYTES,
};
use freestart::nn::{
    evaluate, grad_check, grad_check_preset, init_random, train, Activation, Layer, NetworkSpec,
};
use freestart::run::{compare, prepare, run_candidate, run_candidate_free, seeds, DataSource, Prepared, ScoringModel};
use freestart::{
    score_hc, score_lc, BudgetSchedule, ClassProbabilities, Dataset, Mode, Oracle, Phase, PoolState, RunConfig,
    RunReport, SelectionBatch, Split, Strategy, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 2024;

/// Synthetic task for AC-2/3/4/5/8: 10 classes in 32 dimensions, 20,000
/// train / 5,000 test. A separation of 3.6 gives about 0.95 test accuracy
/// when `mlp-small` sees every training label (see `examples/calibrate.rs`).
fn reference_config(strategy: Strategy, mode: Mode) -> RunConfig {
    RunConfig {
        dataset: DataSource::Synth {
            classes: 10,
            per_class: 2500,
            dim: 32,
            separation: 3.6,
            noise: 1.0,
            seed: None,
        },
        imbalance: None,
        model: "mlp-small".into(),
        strategy,
        budget: BudgetSchedule::rounds(2000, 1000, 8),
        train: TrainConfig::default(),
        mode,
        scoring: ScoringModel::Latest,
        seed: MASTER_SEED,
        replicates: 3,
    }
    .materialize()
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs shared between criteria.
struct Shared {
    data: Prepared,
    free_lc: RunReport,
    free_lc_secs: f64,
    cand_lc: RunReport,
    cand_lc_secs: f64,
}

impl Shared {
    fn build() -> Result<Self, String> {
        let free_cfg = reference_config(Strategy::Lc, Mode::CandidateFree);
        let data = prepare(&free_cfg).map_err(|e| e.to_string())?;
        let t = Instant::now();
        let free_lc = run_candidate_free(&free_cfg, &data).map_err(|e| e.to_string())?;
        let free_lc_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let cand_lc = run_candidate(&reference_config(Strategy::Lc, Mode::Candidate), &data)
            .map_err(|e| e.to_string())?;
        let cand_lc_secs = t.elapsed().as_secs_f64();
        Ok(Self {
            data,
            free_lc,
            free_lc_secs,
            cand_lc,
            cand_lc_secs,
        })
    }
}

fn random_distribution(rng: &mut ChaCha8Rng) -> ClassProbabilities {
    let k = rng.random_range(2..=12);
    // a coarse grid makes exact ties between vectors common
    let raw: Vec<f64> = (0..k).map(|_| f64::from(rng.random_range(1u32..=8))).collect();
    let sum: f64 = raw.iter().sum();
    ClassProbabilities::new(raw.into_iter().map(|p| p / sum).collect()).unwrap()
}

fn ac1() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pool: Vec<(usize, ClassProbabilities)> = (0..10_000).map(|i| (i, random_distribution(&mut rng))).collect();
    for (id, p) in &pool {
        let sum = score_lc(p).value() + score_hc(p).value();
        ensure(sum == 1.0, || format!("id {id}: lc + hc = {sum:e}"))?;
    }
    for k in [0, 1, 10, 137, 1000, 5000, 10_000] {
        let high = select_batch(Phase::High, &pool, k, 0);
        // bottom-k by LC under the same tie rule (ascending id)
        let mut by_lc: Vec<(usize, f64)> = pool.iter().map(|(id, p)| (*id, score_lc(p).value())).collect();
        by_lc.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let bottom: BTreeSet<usize> = by_lc.iter().take(k).map(|(id, _)| *id).collect();
        let top: BTreeSet<usize> = high.ids.iter().copied().collect();
        ensure(top == bottom, || format!("k = {k}: HC top-k differs from LC bottom-k"))?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("10,000 vectors, 7 batch sizes, {secs:.3} s"))
}

fn ac2(s: &Shared) -> Outcome {
    let (free, cand) = (s.free_lc.final_accuracy_mean, s.cand_lc.final_accuracy_mean);
    let diff = (free - cand).abs() * 100.0;
    let secs = s.free_lc_secs + s.cand_lc_secs;
    let detail = format!(
        "candidate-free LC {:.2}%, candidate LC {:.2}%, |diff| {diff:.2} points, {secs:.1} s",
        free * 100.0,
        cand * 100.0
    );
    ensure(s.free_lc.replicates.len() == 3 && s.cand_lc.replicates.len() == 3, || "expected 3 replicates".into())?;
    ensure(diff <= 2.0, || detail.clone())?;
    ensure(secs < 600.0, || format!("runtime {secs:.1} s exceeds 10 min"))?;
    Ok(detail)
}

fn accuracy_at(report: &RunReport, labels: usize) -> Result<f64, String> {
    let accs: Vec<f64> = report
        .replicates
        .iter()
        .map(|r| {
            r.iterations
                .iter()
                .find(|i| i.labels_used == labels)
                .map(|i| i.accuracy)
                .ok_or_else(|| format!("no point at {labels} labels"))
        })
        .collect::<Result<_, _>>()?;
    Ok(accs.iter().sum::<f64>() / accs.len() as f64)
}

fn ac3(s: &Shared) -> Outcome {
    // calibration: the full training set with the run's own init seed
    let all: Vec<usize> = (0..s.data.train.len()).collect();
    let init = seeds::SeedSet::for_replicate(MASTER_SEED, 0).init;
    let full = train(&init_random(&s.data.spec, init).unwrap(), &s.data.train, &all, &TrainConfig::default())
        .and_then(|m| evaluate(&m, &s.data.test))
        .map_err(|e| e.to_string())?;
    ensure((full - 0.95).abs() <= 0.01, || format!("full-data accuracy {full:.4}, not about 0.95"))?;

    let random = run_candidate_free(&reference_config(Strategy::Random, Mode::CandidateFree), &s.data)
        .map_err(|e| e.to_string())?;
    let half = s.free_lc.config.budget.total / 2;
    let (lc_half, rnd_half) = (accuracy_at(&s.free_lc, half)?, accuracy_at(&random, half)?);
    let (lc_final, rnd_final) = (s.free_lc.final_accuracy_mean, random.final_accuracy_mean);
    let detail = format!(
        "full-data {:.2}%; at {half} labels LC {:.2}% vs RANDOM {:.2}%; final LC {:.2}% vs RANDOM {:.2}%",
        full * 100.0,
        lc_half * 100.0,
        rnd_half * 100.0,
        lc_final * 100.0,
        rnd_final * 100.0
    );
    ensure(lc_half >= rnd_half - 0.005 && lc_final >= rnd_final - 0.005, || detail.clone())?;
    Ok(detail)
}

fn ac4(s: &Shared) -> Outcome {
    let cmp = compare(&s.free_lc, &s.cand_lc).map_err(|e| e.to_string())?;
    let measured = s.cand_lc.candidate_training_h.ok_or("candidate run has no candidate time")?;
    ensure(cmp.time_saved_h == measured, || format!("time saved {} != candidate time {measured}", cmp.time_saved_h))?;
    ensure(cmp.time_saved_h > 0.0, || "time saved is not positive".into())?;
    let per_rep: Vec<f64> = s.cand_lc.replicates.iter().map(|r| r.candidate_training_secs.unwrap()).collect();
    let mean_h = per_rep.iter().sum::<f64>() / per_rep.len() as f64 / 3600.0;
    ensure((mean_h - measured).abs() <= 1e-12 * mean_h, || "candidate time is not the replicate mean".into())?;
    for report in [&s.free_lc, &s.cand_lc] {
        for rep in &report.replicates {
            let sum: f64 = rep.iterations.iter().map(|r| r.selection_secs + r.training_secs).sum();
            let rel = (rep.annotation_sim_time_secs - sum).abs() / sum;
            ensure(rel <= 1e-6, || format!("annotation time off by {rel:e} (relative)"))?;
        }
        let mean = report.replicates.iter().map(|r| r.annotation_sim_time_secs).sum::<f64>()
            / report.replicates.len() as f64
            / 3600.0;
        let rel = (report.annotation_sim_time_h - mean).abs() / mean;
        ensure(rel <= 1e-6, || format!("{}: report annotation time off by {rel:e}", report.method_label()))?;
    }
    Ok(format!(
        "time saved {:.3} s ({:.3e} h), mean per-replicate candidate training",
        cmp.time_saved_h * 3600.0,
        cmp.time_saved_h
    ))
}

fn ac5(s: &Shared) -> Outcome {
    let hc = run_candidate_free(&reference_config(Strategy::Hc, Mode::CandidateFree), &s.data)
        .map_err(|e| e.to_string())?;
    let hclc = run_candidate_free(&reference_config(Strategy::Hclc, Mode::CandidateFree), &s.data)
        .map_err(|e| e.to_string())?;
    for (a, b) in hc.replicates.iter().zip(&hclc.replicates) {
        ensure(a.history[0].ids == b.history[0].ids, || {
            format!("replicate {}: iteration-0 sets differ", a.replicate)
        })?;
        ensure(b.iterations[0].phase == Phase::High, || "HCLC iteration 0 is not HIGH".into())?;
        ensure(b.iterations[1].phase == Phase::Low && b.history[1].phase == Some(Phase::Low), || {
            "HCLC iteration 1 is not LOW".into()
        })?;
    }
    Ok(format!("{} replicates: iteration-0 sets equal, iteration 1 LOW", hc.replicates.len()))
}

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut commits, mut rejects) = (0usize, 0usize);
    for seq in 0..1000 {
        let size = rng.random_range(1..80);
        let budget = rng.random_range(0..100);
        let labels: Vec<usize> = (0..size).map(|i| i % 4).collect();
        let mut pool = PoolState::new(size).unwrap();
        let mut oracle = Oracle::new(labels, budget);
        for _ in 0..rng.random_range(0..30) {
            let n = rng.random_range(0..12);
            let ids: Vec<usize> = if rng.random_bool(0.7) {
                let free = pool.unlabeled_ids();
                let mut ids: Vec<usize> = (0..n).filter_map(|_| free.get(rng.random_range(0..free.len().max(1))).copied()).collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            } else {
                (0..n).map(|_| rng.random_range(0..size + 5)).collect()
            };
            let before = (pool.clone(), oracle.clone());
            let batch = SelectionBatch {
                iteration: 0,
                phase: Some(Phase::Random),
                ids,
                scores: Vec::new(),
            };
            match pool.commit_batch(batch, &mut oracle) {
                Ok(_) => {
                    commits += 1;
                    ensure(before.0.labeled().is_subset(pool.labeled()), || format!("seq {seq}: L shrank"))?;
                }
                Err(_) => {
                    rejects += 1;
                    ensure(pool == before.0 && oracle == before.1, || format!("seq {seq}: failed commit changed state"))?;
                }
            }
            ensure(pool.unlabeled().is_disjoint(pool.labeled()), || format!("seq {seq}: U and L overlap"))?;
            ensure(oracle.issued() <= budget, || format!("seq {seq}: labels exceed B"))?;
            ensure(pool.unlabeled().len() + pool.labeled().len() == size, || format!("seq {seq}: ids lost"))?;
        }
        let flat: Vec<usize> = pool.history().iter().flat_map(|b| b.ids.iter().copied()).collect();
        let distinct: BTreeSet<usize> = flat.iter().copied().collect();
        ensure(distinct.len() == flat.len(), || format!("seq {seq}: duplicate id in history"))?;
    }
    Ok(format!("1,000 sequences, {commits} commits, {rejects} rejected commits"))
}

fn ac7() -> Outcome {
    let mut worst: Vec<(String, f64)> = Vec::new();
    for preset in ["mlp-small", "cnn-small"] {
        let report = grad_check_preset(preset, 4, 0, 3, 1e-5).map_err(|e| e.to_string())?;
        for l in &report.layers {
            ensure(l.max_relative_error < 1e-4, || {
                format!("{preset} layer {} ({}): {:e}", l.layer, l.description, l.max_relative_error)
            })?;
        }
        worst.push((preset.into(), report.max_relative_error()));
    }
    // softmax cross-entropy directly on a linear layer, and a linear conv
    let linear = NetworkSpec {
        input_shape: vec![5],
        layers: vec![Layer::dense(5, 4, Activation::None), Layer::SoftmaxHead { classes: 4 }],
    };
    let conv = NetworkSpec {
        input_shape: vec![1, 5, 5],
        layers: vec![
            Layer::Conv2d {
                in_channels: 1,
                out_channels: 2,
                kernel: 3,
                stride: 1,
                activation: Activation::None,
            },
            Layer::Flatten,
            Layer::dense(18, 3, Activation::None),
            Layer::SoftmaxHead { classes: 3 },
        ],
    };
    for (name, spec) in [("dense+softmax", linear), ("conv", conv)] {
        let model = init_random(&spec, 3).unwrap();
        let x: Vec<f64> = (0..spec.input_len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let err = grad_check(&model, &x, 1, 1e-5).map_err(|e| e.to_string())?;
        ensure(err < 1e-4, || format!("{name}: {err:e}"))?;
        worst.push((name.into(), err));
    }

    // two linearly separable 2-D clusters
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 400;
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let (x, y): (f32, f32) = (rng.random_range(-1.0..1.0), rng.random_range(0.2..1.5));
        features.extend([x, if class == 0 { y } else { -y }]);
        labels.push(class);
    }
    let data = Dataset::new(features, vec![2], labels, 2, Split::Train).unwrap();
    let spec = NetworkSpec::preset("mlp-small", &[2], 2).unwrap();
    let cfg = TrainConfig {
        epochs: 20,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let ids: Vec<usize> = (0..n).collect();
    let model = train(&init_random(&spec, 0).unwrap(), &data, &ids, &cfg).map_err(|e| e.to_string())?;
    let acc = evaluate(&model, &data).map_err(|e| e.to_string())?;
    ensure(acc >= 0.99, || format!("separable task train accuracy {acc}"))?;
    let errs: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    Ok(format!("max rel err: {}; separable 2-D train accuracy {acc:.4}", errs.join(", ")))
}

fn ac8(s: &Shared) -> Outcome {
    let again = run_candidate_free(&reference_config(Strategy::Lc, Mode::CandidateFree), &s.data)
        .map_err(|e| e.to_string())?;
    // the data are regenerated from the master seed too
    let fresh = prepare(&reference_config(Strategy::Lc, Mode::CandidateFree)).map_err(|e| e.to_string())?;
    ensure(fresh.train.features == s.data.train.features && fresh.train.labels == s.data.train.labels, || {
        "regenerated data differ".into()
    })?;
    for (a, b) in s.free_lc.replicates.iter().zip(&again.replicates) {
        ensure(a.selected_ids() == b.selected_ids(), || format!("replicate {}: histories differ", a.replicate))?;
        ensure(a.final_accuracy.to_bits() == b.final_accuracy.to_bits(), || {
            format!("replicate {}: final accuracy differs", a.replicate)
        })?;
    }
    ensure(s.free_lc.final_accuracy_mean == again.final_accuracy_mean, || "mean accuracy differs".into())?;
    Ok(format!(
        "{} replicates x {} batches identical",
        again.replicates.len(),
        again.replicates[0].history.len()
    ))
}

fn ac9() -> Outcome {
    let base = RunConfig {
        dataset: DataSource::Synth {
            classes: 10,
            per_class: 6250,
            dim: 32,
            separation: 3.6,
            noise: 1.0,
            seed: None,
        },
        imbalance: Some(ImbalanceSpec {
            majority: 0,
            minority: 9,
            ratio: 10.0,
        }),
        ..reference_config(Strategy::Lc, Mode::CandidateFree)
    };
    let data = prepare(&base).map_err(|e| e.to_string())?;
    let counts = data.train.class_counts();
    ensure(counts[9] == 500, || format!("minority count {}", counts[9]))?;
    ensure(counts[..9].iter().all(|&c| c == 5000), || format!("class counts {counts:?}"))?;
    let expected: Vec<usize> = (2..=10).map(|i| i * 1000).collect();
    let mut parts = Vec::new();
    for strategy in [Strategy::Lc, Strategy::Hc, Strategy::Hclc] {
        let cfg = RunConfig {
            strategy,
            ..base.clone()
        };
        let report = run_candidate_free(&cfg, &data).map_err(|e| e.to_string())?;
        report.check()?;
        for rep in &report.replicates {
            let used: Vec<usize> = rep.iterations.iter().map(|r| r.labels_used).collect();
            ensure(used == expected, || format!("{}: schedule {used:?}", strategy.name()))?;
        }
        parts.push(format!("{} {:.2}%", strategy.name(), report.final_accuracy_mean * 100.0));
    }
    Ok(format!("minority 500 of 45,500; {}", parts.join(", ")))
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let records: Vec<(u8, Vec<u8>)> = (0..25)
        .map(|i| ((i % 10) as u8, (0..3072).map(|_| rng.random()).collect()))
        .collect();
    let cifar = dir.path().join("batch.bin");
    write_cifar_batch(&cifar, &records).map_err(|e| e.to_string())?;
    let ds = read_cifar_batch(&cifar, Split::Train).map_err(|e| e.to_string())?;
    for (i, (label, pixels)) in records.iter().enumerate() {
        let back: Vec<u8> = ds.sample(i).iter().map(|v| (v * 255.0).round() as u8).collect();
        ensure(ds.labels[i] == usize::from(*label) && &back == pixels, || format!("CIFAR record {i} differs"))?;
    }

    let (img, lab) = (dir.path().join("img.idx"), dir.path().join("lab.idx"));
    let pixels: Vec<u8> = (0..7 * 28 * 28).map(|_| rng.random()).collect();
    let labels: Vec<u8> = (0..7).map(|i| i as u8).collect();
    write_idx_images(&img, 28, 28, &pixels).map_err(|e| e.to_string())?;
    write_idx_labels(&lab, &labels).map_err(|e| e.to_string())?;
    let (n, r, c, back) = read_idx_images(&img).map_err(|e| e.to_string())?;
    ensure((n, r, c) == (7, 28, 28) && back == pixels, || "IDX images differ".into())?;
    ensure(read_idx_labels(&lab).map_err(|e| e.to_string())? == labels, || "IDX labels differ".into())?;
    let loaded = load_idx(&img, &lab, Split::Test).map_err(|e| e.to_string())?;
    ensure(loaded.len() == 7 && loaded.sample_shape == [1, 28, 28], || "IDX dataset shape".into())?;

    // malformed inputs
    let bad = dir.path().join("bad");
    fs::write(&bad, vec![0u8; CIFAR_RECORD_BYTES + 100]).unwrap();
    ensure(matches!(read_cifar_batch(&bad, Split::Train), Err(DatasetError::Truncated { .. })), || {
        "truncated CIFAR not reported".into()
    })?;
    let mut wrong_label = vec![0u8; CIFAR_RECORD_BYTES];
    wrong_label[0] = 200;
    fs::write(&bad, wrong_label).unwrap();
    ensure(
        matches!(read_cifar_batch(&bad, Split::Train), Err(DatasetError::LabelOutOfRange { label: 200, .. })),
        || "bad CIFAR label not reported".into(),
    )?;
    ensure(matches!(read_idx_images(&lab), Err(DatasetError::BadMagic { .. })), || "bad magic not reported".into())?;
    let mut short = fs::read(&img).unwrap();
    short.truncate(short.len() - 1);
    fs::write(&bad, short).unwrap();
    ensure(matches!(read_idx_images(&bad), Err(DatasetError::Truncated { .. })), || {
        "truncated IDX not reported".into()
    })?;
    write_idx_labels(&lab, &labels[..5]).unwrap();
    ensure(
        matches!(load_idx(&img, &lab, Split::Test), Err(DatasetError::CountMismatch { images: 7, labels: 5 })),
        || "count mismatch not reported".into(),
    )?;
    Ok("CIFAR and IDX round-trip bit-exactly; 5 malformed files rejected with typed errors".into())
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("AC-1", guarded(ac1)));
    let shared = Shared::build();
    let with_shared = |f: fn(&Shared) -> Outcome| match &shared {
        Ok(s) => guarded(|| f(s)),
        Err(e) => Err(format!("reference runs failed: {e}")),
    };
    results.push(("AC-2", with_shared(ac2)));
    results.push(("AC-3", with_shared(ac3)));
    results.push(("AC-4", with_shared(ac4)));
    results.push(("AC-5", with_shared(ac5)));
    results.push(("AC-6", guarded(ac6)));
    results.push(("AC-7", guarded(ac7)));
    results.push(("AC-8", with_shared(ac8)));
    results.push(("AC-9", guarded(ac9)));
    results.push(("AC-10", guarded(ac10)));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("{name} PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("{name} FAIL  {why}");
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
