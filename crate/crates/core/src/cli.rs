//! Command-line front end. Exit codes: 0 success, 2 configuration error,
//! 3 input-data error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::classifier::{ClassifierConfig, UncertaintyMeasure};
use crate::compare::{compare_strategies, render_median_curves, render_table};
use crate::engine::{run_experiment, BudgetSchedule, ExperimentConfig};
use crate::error::Error;
use crate::ingest::{load_pool, load_ratings, save_pool, write_atomic, write_curve, write_report};
use crate::metrics::{cohen_kappa, exact_agreement, growth_curve, qwk};
use crate::pool::{generate_synthetic_pool, split_pool, EssayPool, SyntheticSpec};
use crate::strategies::{DistanceMetric, HybridParams, StrategyKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "activescore",
    version,
    about = "Active-learning experiments for rubric scoring"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic pool of Gaussian class clusters.
    Gen(GenArgs),
    /// Run one strategy (or all) on a pool and write report and curve files.
    Run(RunArgs),
    /// Run all strategies over several seeds and summarize target fractions.
    Compare(CompareArgs),
    /// Print QWK, Cohen's kappa and exact agreement for a ratings file.
    Qwk(QwkArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long = "per-class")]
    pub per_class: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Distance between adjacent class means.
    #[arg(long, default_value_t = 3.0)]
    pub sep: f64,
    /// Isotropic noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

/// Where the pool comes from: a file, or a synthetic spec.
#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct PoolSource {
    #[arg(short = 'p', long = "pool", group = "source")]
    pub pool: Option<PathBuf>,
    /// Generate the pool in memory with this many items per class.
    #[arg(long = "syn-per-class", group = "source")]
    pub syn_per_class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SyntheticFlags {
    #[arg(long = "syn-levels", default_value_t = 4, conflicts_with = "pool")]
    pub syn_levels: usize,
    #[arg(long = "syn-dim", default_value_t = 16, conflicts_with = "pool")]
    pub syn_dim: usize,
    #[arg(long = "syn-sep", default_value_t = 3.0, conflicts_with = "pool")]
    pub syn_sep: f64,
    #[arg(long = "syn-noise", default_value_t = 1.0, conflicts_with = "pool")]
    pub syn_noise: f64,
    #[arg(long = "syn-seed", default_value_t = 0, conflicts_with = "pool")]
    pub syn_seed: u64,
}

#[derive(Debug, Args)]
pub struct ExperimentFlags {
    #[arg(long, default_value_t = DistanceMetric::Euclidean)]
    pub metric: DistanceMetric,
    #[arg(long, default_value_t = UncertaintyMeasure::LeastConfidence)]
    pub measure: UncertaintyMeasure,
    /// Defaults to max(levels, 10).
    #[arg(long = "seed-size")]
    pub seed_size: Option<usize>,
    #[arg(long = "batch", default_value_t = 10)]
    pub batch: usize,
    #[arg(long = "max-frac", default_value_t = 0.2)]
    pub max_frac: f64,
    /// Share of the unlabeled pool kept by the hybrid uncertainty filter.
    #[arg(long = "pool-fraction", default_value_t = 0.5)]
    pub pool_fraction: f64,
    #[arg(long = "lr", default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long = "l2", default_value_t = 1e-4)]
    pub l2: f64,
    /// Share of the pool held out for validation (stratified).
    #[arg(long = "val-frac", default_value_t = 0.2)]
    pub val_frac: f64,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    One(StrategyKind),
    All,
}

impl FromStr for StrategyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "all" {
            Ok(Self::All)
        } else {
            s.parse().map(Self::One)
        }
    }
}

impl fmt::Display for StrategyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::One(k) => k.fmt(f),
            Self::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: PoolSource,
    #[command(flatten)]
    pub synthetic: SyntheticFlags,
    /// random, uncertainty, topological, hybrid or all.
    #[arg(short = 's', long = "strategy")]
    pub strategy: StrategyChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub experiment: ExperimentFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: PoolSource,
    #[command(flatten)]
    pub synthetic: SyntheticFlags,
    /// Comma-separated list of seeds.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub experiment: ExperimentFlags,
}

#[derive(Debug, Args)]
pub struct QwkArgs {
    /// Two integer columns: human,machine.
    pub ratings: PathBuf,
    /// Number of rating levels; defaults to max rating + 1.
    #[arg(long)]
    pub levels: Option<usize>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }

    fn data(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Argument(_) | Error::Range { .. } => Failure::config(e),
            Error::Format { .. }
            | Error::Data { .. }
            | Error::Io { .. }
            | Error::Numeric(_)
            | Error::Serde(_) => Failure::data(e),
        }
    }
}

fn load_source(source: &PoolSource, syn: &SyntheticFlags) -> Result<EssayPool, Failure> {
    match (&source.pool, source.syn_per_class) {
        (Some(path), _) => Ok(load_pool(path).map_err(Failure::data)?.pool),
        (None, Some(per_class_count)) => {
            let spec = SyntheticSpec {
                dim: syn.syn_dim,
                levels: syn.syn_levels,
                per_class_count,
                separation: syn.syn_sep,
                noise_sigma: syn.syn_noise,
            };
            generate_synthetic_pool(&spec, syn.syn_seed).map_err(Failure::config)
        }
        (None, None) => Err(Failure::config(
            "either --pool or --syn-per-class is required",
        )),
    }
}

fn experiment_config(
    flags: &ExperimentFlags,
    strategy: StrategyKind,
    levels: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        metric: flags.metric,
        measure: flags.measure,
        hybrid: HybridParams {
            pool_fraction: flags.pool_fraction,
        },
        classifier: ClassifierConfig {
            learning_rate: flags.learning_rate,
            epochs: flags.epochs,
            l2_lambda: flags.l2,
            rng_seed: 0,
        },
        schedule: BudgetSchedule {
            seed_size: flags.seed_size.unwrap_or(levels.max(10)),
            batch_size: flags.batch,
            max_fraction: flags.max_frac,
        },
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))
}

fn output(e: Error) -> Failure {
    match e {
        Error::Io { .. } => Failure::config(e),
        other => other.into(),
    }
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let spec = SyntheticSpec {
        dim: args.dim,
        levels: args.levels,
        per_class_count: args.per_class,
        separation: args.sep,
        noise_sigma: args.noise,
    };
    let pool = generate_synthetic_pool(&spec, args.seed).map_err(Failure::config)?;
    save_pool(&pool, None, &args.out).map_err(output)?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let pool = load_source(&args.source, &args.synthetic)?;
    let flags = &args.experiment;
    let (validation, al_pool) =
        split_pool(&pool, flags.val_frac, true, args.seed).map_err(Failure::config)?;
    let strategies: Vec<StrategyKind> = match args.strategy {
        StrategyChoice::One(k) => vec![k],
        StrategyChoice::All => StrategyKind::ALL.to_vec(),
    };
    // Validate everything before doing any work.
    for &s in &strategies {
        experiment_config(flags, s, pool.levels())
            .validate(al_pool.len(), al_pool.levels())
            .map_err(Failure::config)?;
    }
    ensure_dir(&flags.out)?;
    for &s in &strategies {
        let config = experiment_config(flags, s, pool.levels());
        let run = run_experiment(&al_pool, &validation, &config, args.seed)?;
        let (report, curve) = match args.strategy {
            StrategyChoice::One(_) => ("report.json".to_string(), "curve.csv".to_string()),
            StrategyChoice::All => (format!("report-{s}.json"), format!("curve-{s}.csv")),
        };
        write_report(&run, flags.out.join(report)).map_err(output)?;
        write_curve(&growth_curve(&run), flags.out.join(curve)).map_err(output)?;
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let pool = load_source(&args.source, &args.synthetic)?;
    let flags = &args.experiment;
    let base = experiment_config(flags, StrategyKind::Random, pool.levels());
    // Every seed's split has the same size, so one check covers them all.
    let (_, al_pool) = split_pool(&pool, flags.val_frac, true, 0).map_err(Failure::config)?;
    for s in StrategyKind::ALL {
        ExperimentConfig {
            strategy: s,
            ..base
        }
        .validate(al_pool.len(), al_pool.levels())
        .map_err(Failure::config)?;
    }
    ensure_dir(&flags.out)?;
    let cmp = compare_strategies(&pool, &base, &args.seeds, flags.val_frac)?;
    write_atomic(
        &flags.out.join("compare.csv"),
        render_table(&cmp).as_bytes(),
    )
    .map_err(output)?;
    write_atomic(
        &flags.out.join("median-curves.csv"),
        render_median_curves(&cmp).as_bytes(),
    )
    .map_err(output)?;
    print!("{}", render_table(&cmp));
    Ok(())
}

fn cmd_qwk(args: &QwkArgs) -> Result<(), Failure> {
    let pairs = load_ratings(&args.ratings, args.levels).map_err(Failure::data)?;
    println!("qwk {:.6}", qwk(&pairs));
    println!("kappa {:.6}", cohen_kappa(&pairs));
    println!("exact {:.1}", exact_agreement(&pairs));
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Qwk(a) => cmd_qwk(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
