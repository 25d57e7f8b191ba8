use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;
mod validate;

/// Probability laws for comparing two Lagrange finite elements.
#[derive(Debug, Parser)]
#[command(name = "elemodds", version, about)]
struct Cli {
    /// Worker threads for parallel subcommands (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate a probability law as an `h,probability` curve.
    Eval(EvalArgs),
    /// Monte Carlo estimate of the event probability for a pair of error bounds.
    Mc(McArgs),
    /// Run the random-mesh frequency experiment.
    Experiment(ExperimentArgs),
    /// Fit a law to a frequency table.
    Fit(FitArgs),
    /// Run the built-in cross-checks and report pass/fail.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawKind {
    Twostep,
    Sigmoid,
    Gbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitLaw {
    Sigmoid,
    Gbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Unweighted,
    Wilson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McModel {
    /// Generalized Beta prime event `Z <= 0`.
    Gbp,
    /// Independent uniform errors (the sigmoid law).
    Uniform,
}

#[derive(Debug, Args)]
pub struct LawFlags {
    #[arg(long, value_enum)]
    pub law: LawKind,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub delta: Option<u32>,
    #[arg(long)]
    pub hstar: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub law: LawFlags,
    /// Explicit mesh sizes, comma separated. Overrides the range flags.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub h: Vec<f64>,
    /// Lower end of the log-spaced grid (default h*/100).
    #[arg(long)]
    pub h_min: Option<f64>,
    /// Upper end of the log-spaced grid (default 100 h*).
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..))]
    pub points: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, value_enum, default_value = "gbp")]
    pub model: McModel,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Error bound of the lower-degree element.
    #[arg(long, requires = "beta_hi", conflicts_with_all = ["hstar", "delta", "h"])]
    pub beta_lo: Option<f64>,
    /// Error bound of the higher-degree element.
    #[arg(long, requires = "beta_lo")]
    pub beta_hi: Option<f64>,
    /// Bounds from `beta_lo / beta_hi = (h*/h)^delta` instead of explicit values.
    #[arg(long, requires_all = ["delta", "h"])]
    pub hstar: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub delta: Option<u32>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, env = "ELEMODDS_SEED", default_value_t = 2024)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
    pub k1: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
    pub k2: u32,
    #[arg(long, default_value_t = 500.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub center: f64,
    #[arg(long, default_value_t = elemodds::freq::DEFAULT_TRIALS, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
    #[arg(long, default_value_t = elemodds::freq::DEFAULT_JITTER)]
    pub jitter: f64,
    #[arg(long, env = "ELEMODDS_SEED", default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0 / 128.0)]
    pub h_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub h_max: f64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub points: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Frequency table (`h,trials,successes,frequency`) or curve (`h,probability`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "gbp")]
    pub law: FitLaw,
    /// Fixed exponent k2 - k1 (default: from the input's `delta` or `k1`/`k2` comments).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub delta: Option<u32>,
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iterations: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 8)]
    pub restarts: u32,
    #[arg(long, value_enum, default_value = "unweighted")]
    pub weighting: WeightingArg,
    /// Fitted-curve CSV (default: `<out>.curve.csv` when `--out` is given).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..))]
    pub curve_points: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Smaller trial counts.
    #[arg(long)]
    pub quick: bool,
    /// Corrupts one fixture so the failure path can be exercised.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Failures that end the process, by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input data; exit 2.
    Usage(String),
    /// Validation or runtime failure; exit 1.
    Failure(String),
}

impl From<elemodds::Error> for CliError {
    fn from(e: elemodds::Error) -> Self {
        use elemodds::Error::*;
        match e {
            Domain(_) | InsufficientData(_) | Parse { .. } | AtThreshold(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("error: could not start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Eval(a) => commands::eval(&a),
        Command::Mc(a) => commands::mc(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Validate(a) => validate::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
