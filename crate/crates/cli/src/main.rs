use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use block_smoo::data::{
    generate_synthetic, load_air_quality, preprocess_air_quality, write_cache, CacheSidecar, Provenance,
    SyntheticParams,
};
use block_smoo::experiment::{run_experiment, run_pareto_sweep, ExperimentConfig, LoadedProblem, CACHE_ENV};
use block_smoo::verify::{run_suites, Suite, SuiteOptions};
use block_smoo::Error;

const AIR_QUALITY_URL: &str = "https://archive.ics.uci.edu/dataset/501/beijing+multi+site+air+quality+data";
const DEFAULT_CACHE_FILE: &str = "air-quality.cache";

#[derive(Parser)]
#[command(name = "block-smoo", version, about = "Stochastic multi-objective optimization by alternating blocks and functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, step size, seed) cell of an experiment config.
    Run(RunArgs),
    /// Trace Pareto fronts for both comparators over all frequency vectors.
    Sweep(RunArgs),
    /// Run verification suites and print a JSON report.
    Verify(VerifyArgs),
    /// Preprocess raw air-quality CSV files into a dataset cache.
    Ingest(IngestArgs),
    /// Generate a synthetic low-rank regression dataset into a cache.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Root seed, overriding the one in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `results/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// `all`, `rates`, or one of: reductions, mapping, gradients, unbiasedness,
    /// descent, rate-pl, rate-convex, rate-nonconvex.
    #[arg(default_value = "all")]
    suites: String,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corrupt the gradients seen by the gradient suite (self-test of the checker).
    #[arg(long, hide = true)]
    plant_fault: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct IngestArgs {
    /// Directory holding the per-station PRSA_*.csv files.
    source: PathBuf,
    /// Cache file; defaults to `air-quality.cache` under the cache root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Download the archive first (not supported in this build).
    #[arg(long)]
    fetch: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value_t = 1 << 14)]
    n_train: usize,
    #[arg(long, default_value_t = 1 << 10)]
    n_test: usize,
    #[arg(long, default_value_t = 400)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    q: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Failures, split by exit code.
enum Failure {
    /// Exit 1: an experiment, suite or ingestion step failed.
    Run(String),
    /// Exit 2: bad invocation or config.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => with_workers(args.common.workers, || cmd_run(&args)),
        Command::Sweep(args) => with_workers(args.common.workers, || cmd_sweep(&args)),
        Command::Verify(args) => with_workers(args.common.workers, || cmd_verify(&args)),
        Command::Ingest(args) => cmd_ingest(&args),
        Command::Synth(args) => cmd_synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn with_workers(workers: Option<usize>, f: impl FnOnce() -> Result<(), Failure> + Send) -> Result<(), Failure> {
    match workers {
        None => f(),
        Some(0) => Err(Failure::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Run(e.to_string()))?
            .install(f),
    }
}

/// `$BLOCKSMOO_CACHE` when set, else `./cache`.
fn cache_root() -> PathBuf {
    std::env::var_os(CACHE_ENV).map_or_else(|| PathBuf::from("cache"), PathBuf::from)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", path.display())),
        other => Failure::Usage(format!("{}: {other}", path.display())),
    })?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(out: &Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    out.clone().unwrap_or_else(|| Path::new("results").join(&cfg.name))
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config, args.common.seed)?;
    let problem = LoadedProblem::load(&cfg, &cache_root())?;
    let out = out_dir(&args.out, &cfg);
    let (summary, cells) = run_experiment(&cfg, &problem, Some(&out))?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    match summary.budget_work_units {
        Some(b) => println!("{} cells ({failed} failed), budget {b} work units", cells.len()),
        None => println!("{} cells ({failed} failed), wall-clock budget", cells.len()),
    }
    for best in &summary.best {
        match (best.step_size, best.mean_final_test_weighted) {
            (Some(step), Some(loss)) => println!("{:<20} best step {step:<8} mean final test F = {loss:.6e}", best.algorithm.label()),
            _ => println!("{:<20} every step size failed", best.algorithm.label()),
        }
    }
    println!("results in {}", out.display());
    if summary.best.iter().any(|b| b.step_size.is_none()) {
        return Err(Failure::Run("at least one algorithm has no usable step size".into()));
    }
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config, args.common.seed)?;
    let problem = LoadedProblem::load(&cfg, &cache_root())?;
    let out = out_dir(&args.out, &cfg);
    let report = run_pareto_sweep(&cfg, &problem, Some(&out))?;
    println!("{} frequency vectors, {} steps per run", report.vectors, report.steps_per_run);
    println!("{}", serde_json::to_string_pretty(&report.metrics).map_err(|e| Failure::Run(e.to_string()))?);
    println!("fronts in {}", out.display());
    if report.fronts.iter().any(|f| f.points.is_empty()) {
        return Err(Failure::Run("a comparator produced no surviving points".into()));
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let suites = Suite::parse_selector(&args.suites)?;
    let mut options = SuiteOptions { planted_fault: args.plant_fault, ..SuiteOptions::default() };
    if let Some(seed) = args.common.seed {
        options.root_seed = seed;
    }
    let report = run_suites(&suites, &options);
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Run(e.to_string()))?;
    println!("{json}");
    if let Some(path) = &args.out {
        std::fs::write(path, &json).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    }
    for outcome in &report.suites {
        eprintln!("{:<16} {}", outcome.suite.name(), if outcome.passed { "pass" } else { "FAIL" });
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Run("verification failed".into()))
    }
}

fn cmd_ingest(args: &IngestArgs) -> Result<(), Failure> {
    if args.fetch {
        return Err(Failure::Usage(format!(
            "--fetch is not supported by this build; download the archive from {AIR_QUALITY_URL}, unpack it, and pass the directory"
        )));
    }
    let out = args.out.clone().unwrap_or_else(|| cache_root().join(DEFAULT_CACHE_FILE));
    let raw = load_air_quality(&args.source)?;
    if let Ok(existing) = CacheSidecar::read(&out) {
        if out.exists() && existing.provenance == (Provenance::Files { digests: raw.sources.clone() }) {
            println!("{} is up to date with {} source files; nothing to do", out.display(), raw.sources.len());
            return Ok(());
        }
    }
    let pre = preprocess_air_quality(&raw)?;
    write_cache(&out, &pre.dataset, Some(&pre.stats))?;
    let data = &pre.dataset;
    println!(
        "{} raw rows -> {} train + {} test, d = {}, q = {}",
        raw.rows.len(),
        data.train.num_rows(),
        data.test.num_rows(),
        data.train.num_features(),
        data.train.num_responses()
    );
    for (file, digest) in &raw.sources {
        println!("  {file}  sha256 {digest}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let params = SyntheticParams {
        n_train: args.n_train,
        n_test: args.n_test,
        d: args.d,
        q: args.q,
        r: args.r,
        noise_sigma: args.noise,
    };
    let (dataset, _) = generate_synthetic(args.seed, &params).map_err(|e| Failure::Usage(e.to_string()))?;
    write_cache(&args.out, &dataset, None)?;
    println!(
        "wrote {} ({} train + {} test rows, d = {}, q = {})",
        args.out.display(),
        params.n_train,
        params.n_test,
        params.d,
        params.q
    );
    Ok(())
}
