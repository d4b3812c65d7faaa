use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fallbench::classifiers::{self, ClassifierKind, TrainConfig};
use fallbench::dataio;
use fallbench::experiments::{delta_report, run_all, ExperimentSpec, RunOutcome};
use fallbench::ingest::{scan_catalog, SubjectId};
use fallbench::report::write_run_outputs;
use fallbench::{Dataset64, Model64};

#[derive(Parser)]
#[command(name = "fallbench", version, about = "Fall-detection benchmark over wearable IMU trial files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan and fully parse a dataset tree, reporting counts
    Verify { root: PathBuf },
    /// Run benchmark experiments and write table reports
    Run(RunArgs),
    /// Train one classifier on a labeled CSV and save the model
    Train(TrainArgs),
    /// Predict labels for CSV rows with a saved model
    Predict(PredictArgs),
    /// Re-render tables from a previous run directory
    Report {
        #[arg(long)]
        from: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Dataset root; falls back to $FALLBENCH_ROOT
    #[arg(long)]
    root: Option<PathBuf>,
    /// Comma-separated experiment ids, e.g. "1,3,5"
    #[arg(long)]
    experiments: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep every n-th sample of each trial
    #[arg(long)]
    decimation: Option<usize>,
    /// Use raw ADC counts instead of calibrated physical units
    #[arg(long)]
    raw_counts: bool,
    /// Z-score features using training-set statistics
    #[arg(long)]
    standardize: bool,
    /// Grid-search odd k in 1..=9 for KNN by cross-validation
    #[arg(long)]
    tune_k: bool,
    /// Disable label-stratified splitting
    #[arg(long)]
    no_stratify: bool,
    /// Keep whole trials on one side of the split (leakage-free variant)
    #[arg(long)]
    split_by_trial: bool,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    knn_k: Option<usize>,
    /// Comma-separated subject ids overriding the cohort convention
    #[arg(long)]
    subjects: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
    /// Replay a previous run's config.json; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    kind: String,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 5)]
    knn_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
}

/// Everything needed to replay a run bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    root: PathBuf,
    experiments: Vec<u8>,
    seed: u64,
    decimation: usize,
    calibrated: bool,
    standardize: bool,
    tune_k: bool,
    stratify: bool,
    split_by_trial: bool,
    folds: usize,
    knn_k: usize,
    subjects: Vec<String>,
    out_dir: PathBuf,
    run_id: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            root: PathBuf::new(),
            experiments: vec![1, 2, 3, 4, 5, 6],
            seed: 42,
            decimation: 1,
            calibrated: true,
            standardize: false,
            tune_k: false,
            stratify: true,
            split_by_trial: false,
            folds: 10,
            knn_k: 5,
            subjects: Vec::new(),
            out_dir: PathBuf::from("out"),
            run_id: String::new(),
        }
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout with success
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Verify { root } => cmd_verify(&root),
        Command::Run(args) => cmd_run(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Report { from } => cmd_report(&from),
    }
}

fn cmd_verify(root: &Path) -> ExitCode {
    let catalog = match scan_catalog(root) {
        Ok(c) => c,
        Err(e) => return fail(2, e),
    };
    println!("{} files", catalog.len());
    let mut total_rows = 0usize;
    for entry in &catalog.entries {
        match fallbench::ingest::parse_trial(
            &entry.source_path,
            (entry.subject, entry.activity, entry.trial),
        ) {
            Ok(rec) => total_rows += rec.samples.len(),
            Err(e) => return fail(2, e),
        }
    }
    println!("{total_rows} data rows");
    println!("per-subject trial counts:");
    for (subject, n) in catalog.per_subject_counts() {
        println!("  {subject}: {n}");
    }
    println!("per-activity trial counts:");
    for (activity, n) in catalog.per_activity_counts() {
        println!("  {activity}: {n}");
    }
    if catalog.skipped.is_empty() {
        println!("skipped: none");
    } else {
        println!("skipped ({}):", catalog.skipped.len());
        for s in &catalog.skipped {
            println!("  {}: {}", s.path.display(), s.reason);
        }
    }
    ExitCode::SUCCESS
}

fn parse_id_list(s: &str) -> Result<Vec<u8>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u8>()
                .map_err(|_| format!("bad experiment id '{t}'"))
                .and_then(|id| {
                    if (1..=6).contains(&id) {
                        Ok(id)
                    } else {
                        Err(format!("experiment id {id} outside 1..=6"))
                    }
                })
        })
        .collect()
}

fn parse_subject_list(s: &str) -> Result<Vec<SubjectId>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<SubjectId>().map_err(|e| e.to_string()))
        .collect()
}

fn merge_run_config(args: &RunArgs) -> Result<RunConfig, (u8, String)> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (2u8, format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| (2u8, format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(root) = &args.root {
        cfg.root = root.clone();
    } else if cfg.root.as_os_str().is_empty() {
        match std::env::var_os("FALLBENCH_ROOT") {
            Some(v) => cfg.root = PathBuf::from(v),
            None => {
                return Err((
                    1,
                    "no dataset root: pass --root or set FALLBENCH_ROOT".into(),
                ))
            }
        }
    }
    if let Some(ids) = &args.experiments {
        cfg.experiments = parse_id_list(ids).map_err(|m| (1u8, m))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(d) = args.decimation {
        if d == 0 {
            return Err((1, "--decimation must be >= 1".into()));
        }
        cfg.decimation = d;
    }
    if args.raw_counts {
        cfg.calibrated = false;
    }
    if args.standardize {
        cfg.standardize = true;
    }
    if args.tune_k {
        cfg.tune_k = true;
    }
    if args.no_stratify {
        cfg.stratify = false;
    }
    if args.split_by_trial {
        cfg.split_by_trial = true;
    }
    if let Some(folds) = args.folds {
        cfg.folds = folds;
    }
    if let Some(k) = args.knn_k {
        cfg.knn_k = k;
    }
    if args.tune_k && args.knn_k.is_some() {
        return Err((1, "contradictory flags: --tune-k and --knn-k".into()));
    }
    if let Some(s) = &args.subjects {
        cfg.subjects = parse_subject_list(s)
            .map_err(|m| (1u8, m))?
            .iter()
            .map(ToString::to_string)
            .collect();
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(id) = &args.run_id {
        cfg.run_id = id.clone();
    }
    if cfg.run_id.is_empty() {
        cfg.run_id = format!("run-seed{}", cfg.seed);
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let cfg = match merge_run_config(&args) {
        Ok(c) => c,
        Err((code, msg)) => return fail(code, msg),
    };
    let subjects_override: Vec<SubjectId> = cfg
        .subjects
        .iter()
        .map(|s| s.parse().expect("validated above or from config"))
        .collect();
    let mut base = match ExperimentSpec::standard(1, cfg.seed) {
        Ok(b) => b,
        Err(e) => return fail(1, e),
    };
    base.decimation = cfg.decimation;
    base.calibrated = cfg.calibrated;
    base.standardize = cfg.standardize;
    base.tune_k = cfg.tune_k;
    base.stratify = cfg.stratify;
    base.split_by_trial = cfg.split_by_trial;
    base.folds = cfg.folds;
    base.knn_k = cfg.knn_k;
    base.subjects_override = subjects_override;
    base.seed = cfg.seed;

    let mut log = String::new();
    let start = Instant::now();
    let logline = |log: &mut String, msg: String| {
        println!("{msg}");
        log.push_str(&msg);
        log.push('\n');
    };
    logline(
        &mut log,
        format!(
            "run {}: experiments {:?}, seed {}, decimation {}",
            cfg.run_id, cfg.experiments, cfg.seed, cfg.decimation
        ),
    );

    let (outcomes, deltas) = match run_all(&cfg.root, &cfg.experiments, &base) {
        Ok(r) => r,
        Err(e) => return fail(2, e),
    };
    for o in &outcomes {
        match &o.report {
            Some(r) => logline(
                &mut log,
                format!(
                    "experiment {}: {} rows ({} train / {} test), selected {} (cv {}), {:.2}s",
                    o.id,
                    r.rows_total,
                    r.rows_train,
                    r.rows_test,
                    r.selected.short_name(),
                    fallbench::report::fmt_pct(r.selected_cv_accuracy),
                    r.wall_clock_secs
                ),
            ),
            None => logline(
                &mut log,
                format!(
                    "experiment {}: FAILED: {}",
                    o.id,
                    o.error.as_deref().unwrap_or("unknown")
                ),
            ),
        }
    }
    logline(
        &mut log,
        format!("total wall clock {:.2}s", start.elapsed().as_secs_f64()),
    );

    let out_dir = cfg.out_dir.join(&cfg.run_id);
    let config_json = serde_json::to_string_pretty(&cfg).expect("config serializes");
    if let Err(e) = write_run_outputs(&out_dir, &outcomes, &deltas, &config_json, &log) {
        return fail(2, e);
    }
    println!("reports written to {}", out_dir.display());
    if outcomes.iter().any(|o| o.report.is_none()) {
        return fail(2, "one or more experiments failed");
    }
    ExitCode::SUCCESS
}

fn cmd_train(args: TrainArgs) -> ExitCode {
    let kind: ClassifierKind = match args.kind.parse() {
        Ok(k) => k,
        Err(e) => return fail(1, e),
    };
    let data: Dataset64 = match dataio::read_labeled_csv(&args.input) {
        Ok(d) => d,
        Err(e) => return fail(2, e),
    };
    let mut cfg = TrainConfig::new(kind);
    cfg.knn_k = args.knn_k;
    cfg.seed = args.seed;
    let model = match classifiers::train(&data, &cfg) {
        Ok(m) => m,
        Err(e) => return fail(2, e),
    };
    let json = serde_json::to_string_pretty(&model).expect("model serializes");
    if let Err(e) = std::fs::write(&args.model, json) {
        return fail(2, e);
    }
    println!(
        "trained {} on {} rows, saved to {}",
        kind.short_name(),
        data.len(),
        args.model.display()
    );
    ExitCode::SUCCESS
}

fn cmd_predict(args: PredictArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.model) {
        Ok(t) => t,
        Err(e) => return fail(2, e),
    };
    let model: Model64 = match serde_json::from_str(&text) {
        Ok(m) => m,
        Err(e) => return fail(2, format!("bad model file: {e}")),
    };
    let (rows, _) = match dataio::read_dataset_csv::<f64>(&args.input) {
        Ok(r) => r,
        Err(e) => return fail(2, e),
    };
    let pred = match model.predict(&rows) {
        Ok(p) => p,
        Err(e) => return fail(2, e),
    };
    for label in pred {
        println!("{label}");
    }
    ExitCode::SUCCESS
}

fn cmd_report(from: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(from.join("reports.json")) {
        Ok(t) => t,
        Err(e) => return fail(2, format!("cannot read reports.json: {e}")),
    };
    let outcomes: Vec<RunOutcome> = match serde_json::from_str(&text) {
        Ok(o) => o,
        Err(e) => return fail(2, format!("bad reports.json: {e}")),
    };
    let reports: Vec<_> = outcomes.iter().filter_map(|o| o.report.clone()).collect();
    let deltas = delta_report(&reports);
    let config_json = std::fs::read_to_string(from.join("config.json")).unwrap_or_default();
    let log = std::fs::read_to_string(from.join("log.txt")).unwrap_or_default();
    if let Err(e) = write_run_outputs(from, &outcomes, &deltas, &config_json, &log) {
        return fail(2, e);
    }
    let (_, t2_md) = fallbench::report::table2(&outcomes);
    let (_, t4_md) = fallbench::report::table4(&outcomes);
    print!("{t2_md}\n{t4_md}");
    ExitCode::SUCCESS
}
