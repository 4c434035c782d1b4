//! `silt`: command-line driver for the constants, variance integrals,
//! Monte Carlo experiments and the acceptance suite.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "silt", version, about = "Numerical laboratory for derivatives of self-intersection local time")]
pub struct Cli {
    /// Experiment configuration (JSON, schema version 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "SILT_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "SILT_OUT")]
    out: Option<PathBuf>,
    /// Format of tabular output.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-chaos constants beta, phi, sigma^2 and the total series.
    Constants,
    /// Chaos variance integrals over an eps grid with extrapolated limits.
    Variance,
    /// Monte Carlo experiment for the renormalized functional.
    Simulate,
    /// Monte Carlo experiment for the reduced statistic eta.
    Eta,
    /// Runs the acceptance criteria A1-A9.
    Verify,
    /// Regenerates the test report from a stored sample file.
    Report {
        /// Sample file written by `simulate` or `eta`.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] silt::Error),
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
