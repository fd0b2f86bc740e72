//! `foodchain`: classify, simulate and cross-check stochastic food chains.
//!
//! Exit codes: 0 success, 2 input error, 3 critical classification under
//! `--strict`, 4 numerical failure, 5 verification failure.

mod commands;
mod config;
mod manifest;
mod sweep;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Critical(String),
    Numerical(String),
    Verification(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Critical(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Verification(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Critical(m) => write!(f, "critical classification: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "foodchain",
    version,
    about = "Persistence analysis and simulation of stochastic Lotka-Volterra food chains"
)]
pub struct Cli {
    /// Worker threads for ensemble simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify every species as persistent or extinct.
    Analyze(AnalyzeArgs),
    /// Simulate an ensemble of paths; writes trajectory CSVs and ensemble stats.
    Simulate(SimulateArgs),
    /// Classify, simulate, and check the simulation against the classification.
    Verify(VerifyArgs),
    /// Evaluate the classification over a grid of one parameter.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Model file (JSON, see schema/chain.schema.json).
    pub config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with code 3 if any criterion is critical (zero within 1e-12).
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Discarded initial time (default: 10% of the horizon).
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Record every k-th step (default: at most 10^6 samples per path).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub stride: Option<u64>,
    /// Base seed; falls back to FOODCHAIN_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model file (JSON, see schema/chain.schema.json).
    pub config: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Horizon.
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    /// Number of independent paths.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub paths: u64,
    /// How many of the paths to export as CSV.
    #[arg(long, default_value_t = 1)]
    pub csv_paths: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Model file (JSON, see schema/chain.schema.json).
    pub config: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Horizon; long enough for time averages to settle.
    #[arg(long, default_value_t = 2000.0)]
    pub t_end: f64,
    /// Number of independent paths.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub paths: u64,
    /// JSON file `{"time_avg": [...]}` overriding the expected long-run means
    /// of the persistent species.
    #[arg(long)]
    pub expected: Option<PathBuf>,
    /// Absolute slack added to every tolerance band.
    #[arg(long, default_value_t = 0.0)]
    pub abs_tol: f64,
    /// Write the check report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Model file (JSON, see schema/chain.schema.json).
    pub config: PathBuf,
    /// Parameter to vary: `sigma_<i><i>` (or `sigma_<i>,<i>`), `a10`, `a11`,
    /// `a<j>0`, `a<j><j-1>`, `a<j><j+1>` (use `a<j>,<k>` for multi-digit indices).
    #[arg(long)]
    pub param: String,
    /// `lo:hi:steps`, `steps >= 1` evenly spaced points including both ends.
    #[arg(long)]
    pub grid: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => verify::verify(a),
        Command::Sweep(a) => sweep::sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("foodchain: {e}");
            ExitCode::from(e.code())
        }
    }
}
