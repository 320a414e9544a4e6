//! `mmt` — command-line front end for the dispersive-wave laboratory.
//!
//! Subcommands:
//! - `simulate`: integrate the evolution from a JSON config, recording
//!   conserved-quantity series and optional spectral snapshots.
//! - `probe`: run a frequency-sweep of the third-order expansion of the
//!   data-to-solution map and fit its growth rate.
//! - `map`: tabulate the well-posedness classification over a `(beta, s)`
//!   rectangle.
//! - `bench`: sweep level-set measure estimates against their closed-form
//!   counting bounds.
//! - `selftest`: fast built-in invariant suite.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure or I/O
//! error, 3 failed assertion (slope, bound, or selftest check).

mod commands;
mod config;
mod output;
mod selftest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("assertion: {0}")]
    Assertion(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
            CliError::Assertion(_) => 3,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: ./runs/<timestamp>).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "mmt", version, about = "Laboratory for a one-dimensional dispersive wave model")]
struct Cli {
    /// Worker threads (falls back to the MMT_THREADS environment variable).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the evolution and record invariants over time.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Override the random seed of the initial data, if it has one.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep the third-order response against its predicted growth rate.
    Probe {
        #[command(flatten)]
        run: RunArgs,
        /// Fail (exit 3) if |fitted - predicted| slope exceeds this tolerance.
        #[arg(long)]
        assert_slope: Option<f64>,
    },
    /// Chart the classification of regularity/nonlinearity pairs.
    Map {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare measured level-set sizes against their counting bounds.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Override the sampling seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the fast built-in invariant suite.
    Selftest,
}

fn init_threads(cli_threads: Option<usize>) -> Result<(), CliError> {
    let threads = match cli_threads {
        Some(n) => Some(n),
        None => match std::env::var("MMT_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                CliError::Config(format!("MMT_THREADS: not a thread count: {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Simulate { run, seed } => {
            let cfg: config::SimulateConfig = config::load_json(&run.config)?;
            commands::cmd_simulate(&cfg, run.out_dir, seed)
        }
        Command::Probe { run, assert_slope } => {
            let cfg: config::ProbeConfig = config::load_json(&run.config)?;
            commands::cmd_probe(&cfg, run.out_dir, assert_slope)
        }
        Command::Map { run } => {
            let cfg: config::MapConfig = config::load_json(&run.config)?;
            commands::cmd_map(&cfg, run.out_dir)
        }
        Command::Bench { run, seed } => {
            let cfg: config::BenchConfig = config::load_json(&run.config)?;
            commands::cmd_bench(&cfg, run.out_dir, seed)
        }
        Command::Selftest => selftest::cmd_selftest(),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("mmt: {e}");
        std::process::exit(e.exit_code());
    }
}
