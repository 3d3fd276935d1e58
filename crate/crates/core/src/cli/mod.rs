//! `lgqctl`: command-line driver for the optomechanical control experiments.

mod commands;
pub mod config;
pub mod output;
mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Core(E::InvalidArgument(_) | E::Unsupported(_)) => EXIT_CONFIG,
            CliError::Core(E::Truncation { .. }) | CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
            CliError::Core(_) => EXIT_DIVERGENCE,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lgqctl",
    version,
    about = "Optimal control of a linearized optomechanical system"
)]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `experiment.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the final mechanical occupation.
    Cool(OptimizeArgs),
    /// Minimize the smallest partially transposed symplectic eigenvalue.
    Entangle(OptimizeArgs),
    /// Compare adjoint, forward-sensitivity and finite-difference gradients.
    GradCheck,
    /// Compare the moment equations against a truncated Fock-space simulation.
    OracleCompare {
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Scale a learned pulse by `1 + ζ` and record the loss.
    SweepDeviation(PulseArgs),
    /// Evaluate a learned pulse under Gaussian amplitude and phase noise.
    InjectNoise(PulseArgs),
    /// Continue a learned pulse with the drive switched off.
    FreeEvolve {
        #[command(flatten)]
        pulse: PulseArgs,
        #[arg(long)]
        extension: Option<f64>,
    },
    /// Continue an interrupted optimization from its checkpoint.
    Resume,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Stop after this many iterations, leaving a checkpoint to resume from.
    #[arg(long)]
    pub halt_after: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PulseArgs {
    /// Pulse CSV; defaults to `experiment.pulse`, then `<out>/pulse.csv`.
    #[arg(long)]
    pub pulse: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the verb and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("LGQCTL_LOG")
        .try_init();
    let threads = match std::env::var("LGQCTL_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!(
                    "configuration error: LGQCTL_THREADS must be a positive integer, got {v:?}"
                );
                return EXIT_CONFIG;
            }
        },
        Err(_) => 0,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("i/o error: cannot start thread pool: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| commands::dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("lgqctl: {e}");
            e.exit_code()
        }
    }
}
