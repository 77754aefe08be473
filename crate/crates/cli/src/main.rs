//! `freestart`: run active-learning experiments from TOML files.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration
//! errors (bad file, unknown key, unknown preset, bad arguments).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freestart::datasets::{synth_blobs, SynthSpec};
use freestart::experiment::{ExperimentFile, Overrides};
use freestart::nn::{grad_check_preset, preset_check_shape, NnError};
use freestart::run::{
    compare, curve_points, prepare, run_replicate, write_comparison_csv, write_curves_csv,
    ComparisonRow, Mode, Prepared, RunConfig, RunError, RunReport,
};
use freestart::Strategy;
use rayon::prelude::*;

#[derive(Debug, Parser)]
#[command(name = "freestart", version, about = "Candidate-free active learning experiments")]
struct Cli {
    /// Directory for reports and tables.
    #[arg(long, global = true, env = "FREESTART_OUT_DIR", default_value = "freestart-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment in the mode given by the file (or --mode).
    Run {
        config: PathBuf,
        #[command(flatten)]
        over: OverrideArgs,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Run the experiment in candidate mode; with --against, also write the
    /// comparison table against a candidate-free report.
    Baseline {
        config: PathBuf,
        #[command(flatten)]
        over: OverrideArgs,
        #[command(flatten)]
        exec: ExecArgs,
        /// Candidate-free report to compare against.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Comparison CSV path (default: <out>/comparison.csv).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Sweep every strategy of the file (all eight by default).
    Ablate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Table path (default: <out>/ablation.csv).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Long-format learning-curve CSV from one or more reports.
    Curves {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Output path (default: <out>/curves.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Finite-difference gradient check of a network preset.
    Gradcheck {
        preset: String,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        samples: usize,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
    },
    /// Generate Gaussian-blob data as CSV plus a manifest.
    Synth {
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 2500)]
        per_class: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 3.6)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct OverrideArgs {
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Debug, Args)]
struct ExecArgs {
    /// Worker threads for replicates.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    /// Report path (default: <out>/<method>-seed<seed>.json).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: freestart::acquisition::AcquisitionError| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "candidate-free" | "free" => Ok(Mode::CandidateFree),
        "candidate" => Ok(Mode::Candidate),
        other => Err(format!("unknown mode `{other}` (candidate-free or candidate)")),
    }
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = if e.is_config() { 2 } else { 1 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::runtime(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, Failure> {
    let file = ExperimentFile::load(path)?;
    Ok(file.run_config(overrides)?)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    if jobs == 0 {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::runtime(e.to_string()))
}

/// Run every replicate of every config on `jobs` workers. All configs must
/// share the data in `data`.
fn run_many(cfgs: &[RunConfig], data: &Prepared, jobs: usize) -> Result<Vec<RunReport>, Failure> {
    let work: Vec<(usize, usize)> = cfgs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let done = thread_pool(jobs)?.install(|| {
        work.par_iter()
            .map(|&(c, r)| run_replicate(&cfgs[c], data, r).map(|rep| (c, rep)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut per_cfg: Vec<Vec<_>> = vec![Vec::new(); cfgs.len()];
    for (c, rep) in done {
        per_cfg[c].push(rep);
    }
    Ok(cfgs
        .iter()
        .zip(per_cfg)
        .map(|(cfg, reps)| RunReport::from_replicates(cfg.clone(), reps))
        .collect())
}

fn print_iterations(report: &RunReport) {
    let label = report.method_label();
    for rep in &report.replicates {
        for it in &rep.iterations {
            println!(
                "{label} r{} iter {} {} +{} labels={} acc={:.4} select={:.3}s train={:.3}s",
                rep.replicate,
                it.iteration,
                it.phase,
                it.selected,
                it.labels_used,
                it.accuracy,
                it.selection_secs,
                it.training_secs
            );
        }
    }
}

fn print_summary(report: &RunReport) {
    let std = report
        .final_accuracy_std
        .map_or(String::new(), |s| format!(" +/- {s:.4}"));
    print!(
        "{}: final accuracy {:.4}{std}, annotation time {:.6} h",
        report.method_label(),
        report.final_accuracy_mean,
        report.annotation_sim_time_h
    );
    match report.candidate_training_h {
        Some(h) => println!(", candidate training {h:.6} h"),
        None => println!(),
    }
}

fn report_path(out: &Path, explicit: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    explicit.unwrap_or_else(|| out.join(format!("{}-seed{}.json", cfg.method_label(), cfg.seed)))
}

/// Write the report plus one JSON-lines selection history per replicate.
fn save_report(report: &RunReport, path: &Path) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    report.save(path)?;
    let stem = path.with_extension("");
    for rep in &report.replicates {
        let hist = PathBuf::from(format!("{}.r{}.history.jsonl", stem.display(), rep.replicate));
        let mut w = create(&hist)?;
        for record in &rep.history {
            let line = serde_json::to_string(record).map_err(|e| io_failure(&hist, e))?;
            writeln!(w, "{line}").map_err(|e| io_failure(&hist, e))?;
        }
        w.flush().map_err(|e| io_failure(&hist, e))?;
    }
    Ok(())
}

fn execute(cfg: RunConfig, exec: ExecArgs, out: &Path) -> Result<(RunReport, PathBuf), Failure> {
    let data = prepare(&cfg)?;
    let report = run_many(std::slice::from_ref(&cfg), &data, exec.jobs)?.remove(0);
    print_iterations(&report);
    print_summary(&report);
    let path = report_path(out, exec.output, &cfg);
    save_report(&report, &path)?;
    println!("report: {}", path.display());
    Ok((report, path))
}

fn cmd_run(
    config: &Path,
    over: OverrideArgs,
    mode: Option<Mode>,
    exec: ExecArgs,
    out: &Path,
) -> Result<(), Failure> {
    let overrides = Overrides {
        strategy: over.strategy,
        seed: over.seed,
        replicates: over.replicates,
        mode,
    };
    execute(load_config(config, &overrides)?, exec, out).map(|_| ())
}

fn cmd_baseline(
    config: &Path,
    over: OverrideArgs,
    exec: ExecArgs,
    against: Option<PathBuf>,
    table: Option<PathBuf>,
    out: &Path,
) -> Result<(), Failure> {
    let overrides = Overrides {
        strategy: over.strategy,
        seed: over.seed,
        replicates: over.replicates,
        mode: Some(Mode::Candidate),
    };
    let cfg = load_config(config, &overrides)?;
    // fail before spending any compute on an unreadable reference
    let free = against
        .map(|p| RunReport::load(&p).map_err(Failure::from))
        .transpose()?;
    let (baseline, _) = execute(cfg, exec, out)?;
    if let Some(free) = free {
        let cmp = compare(&free, &baseline)?;
        let path = table.unwrap_or_else(|| out.join("comparison.csv"));
        write_comparison_csv(&cmp.rows, create(&path)?)?;
        println!(
            "time saved {:.6} h, accuracy delta {:+.4}; table: {}",
            cmp.time_saved_h,
            cmp.accuracy_delta,
            path.display()
        );
    }
    Ok(())
}

fn cmd_ablate(
    config: &Path,
    overrides: Overrides,
    jobs: usize,
    table: Option<PathBuf>,
    out: &Path,
) -> Result<(), Failure> {
    let file = ExperimentFile::load(config)?;
    let cfgs = file
        .sweep()
        .into_iter()
        .map(|s| {
            file.run_config(&Overrides {
                strategy: Some(s),
                ..overrides.clone()
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    // the strategy does not enter data preparation, so one load serves all
    let data = prepare(&cfgs[0])?;
    let reports = run_many(&cfgs, &data, jobs)?;
    let dir = out.join("ablation");
    let mut rows = Vec::new();
    for report in &reports {
        print_summary(report);
        save_report(report, &report_path(&dir, None, &report.config))?;
        rows.push(ComparisonRow::from_report(report, 0.0));
    }
    let path = table.unwrap_or_else(|| out.join("ablation.csv"));
    write_comparison_csv(&rows, create(&path)?)?;
    println!("table: {}", path.display());
    Ok(())
}

fn cmd_curves(reports: &[PathBuf], output: Option<PathBuf>, out: &Path) -> Result<(), Failure> {
    let loaded = reports
        .iter()
        .map(|p| RunReport::load(p).map_err(|e| Failure::runtime(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let points = curve_points(&loaded);
    let path = output.unwrap_or_else(|| out.join("curves.csv"));
    write_curves_csv(&points, create(&path)?)?;
    println!("{} rows: {}", points.len(), path.display());
    Ok(())
}

const GRAD_TOLERANCE: f64 = 1e-4;

fn cmd_gradcheck(preset: &str, classes: usize, seed: u64, samples: usize, epsilon: f64) -> Result<(), Failure> {
    let report = grad_check_preset(preset, classes, seed, samples, epsilon).map_err(|e| match e {
        NnError::UnknownPreset(_) | NnError::InvalidConfig(_) | NnError::InvalidSpec(_) => {
            Failure::config(e.to_string())
        }
        other => Failure::runtime(other.to_string()),
    })?;
    println!("{preset} on input {:?}, {classes} classes", preset_check_shape(preset));
    for l in &report.layers {
        println!(
            "  layer {} {:<28} {:>6} params  max rel err {:.3e}",
            l.layer, l.description, l.params, l.max_relative_error
        );
    }
    match report.worst() {
        Some(w) if w.max_relative_error >= GRAD_TOLERANCE => Err(Failure::runtime(format!(
            "gradient check failed at layer {} ({}): {:.3e} >= {GRAD_TOLERANCE:e}",
            w.layer, w.description, w.max_relative_error
        ))),
        _ => {
            println!("ok: max relative error {:.3e}", report.max_relative_error());
            Ok(())
        }
    }
}

fn cmd_synth(spec: SynthSpec, out: &Path) -> Result<(), Failure> {
    let (train, test) = synth_blobs(&spec).map_err(|e| Failure::config(e.to_string()))?;
    for (name, ds) in [("train.csv", &train), ("test.csv", &test)] {
        let path = out.join(name);
        ds.write_csv(create(&path)?).map_err(|e| io_failure(&path, e))?;
    }
    let manifest = out.join("manifest.json");
    let json = serde_json::to_string_pretty(&spec.manifest()).map_err(|e| io_failure(&manifest, e))?;
    fs::write(&manifest, json + "\n").map_err(|e| io_failure(&manifest, e))?;
    println!(
        "{} train / {} test samples in {}",
        train.len(),
        test.len(),
        out.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let out = cli.out;
    match cli.command {
        Command::Run {
            config,
            over,
            mode,
            exec,
        } => cmd_run(&config, over, mode, exec, &out),
        Command::Baseline {
            config,
            over,
            exec,
            against,
            table,
        } => cmd_baseline(&config, over, exec, against, table, &out),
        Command::Ablate {
            config,
            seed,
            replicates,
            mode,
            jobs,
            table,
        } => {
            let overrides = Overrides {
                strategy: None,
                seed,
                replicates,
                mode,
            };
            cmd_ablate(&config, overrides, jobs, table, &out)
        }
        Command::Curves { reports, output } => cmd_curves(&reports, output, &out),
        Command::Gradcheck {
            preset,
            classes,
            seed,
            samples,
            epsilon,
        } => cmd_gradcheck(&preset, classes, seed, samples, epsilon),
        Command::Synth {
            classes,
            per_class,
            dim,
            separation,
            noise,
            seed,
        } => cmd_synth(
            SynthSpec {
                classes,
                per_class,
                dim,
                separation,
                noise,
                seed,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
