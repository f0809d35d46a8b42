//! `kdvsat`: run scenarios, property suites, refinement studies and the
//! critical-length query.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kdvsat::properties::DEFAULT_SEED;
use kdvsat::KdvError;

use crate::commands::RunOptions;
use crate::scenario::{parse_real, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl From<KdvError> for CliError {
    fn from(e: KdvError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_FAILED: u8 = 4;

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kdvsat", version, about = "KdV simulator with L2-saturated distributed feedback")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "KDVSAT_OUT", default_value = "kdvsat-out")]
    out: PathBuf,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write the trace, snapshots and report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Envelope slack, overriding the scenario.
        #[arg(long)]
        slack: Option<f64>,
        /// Keep every step in the snapshot file.
        #[arg(long)]
        full_snapshots: bool,
    },
    /// Run the randomized property suites.
    Check {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Per-step energy slack of the closed-loop suite.
        #[arg(long, default_value_t = 1e-10)]
        slack: f64,
        /// Replace the sector coefficient min{u_s/(a r), 1} by the max.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Refine a scenario in h and dt together and report observed orders.
    Convergence {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// List (k, l) with 2 pi sqrt((k^2 + k l + l^2) / 3) within tolerance of L.
    Critical {
        /// Domain length; a trailing `pi` factor is accepted.
        #[arg(long, value_parser = parse_length)]
        length: f64,
        #[arg(long, default_value_t = 50)]
        bound: u32,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn parse_length(s: &str) -> Result<f64, String> {
    parse_real(s).ok_or_else(|| format!("'{s}' is not a real number"))
}

fn print(lines: &[String], quiet: bool) {
    if !quiet {
        for l in lines {
            println!("{l}");
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { scenario, slack, full_snapshots } => {
            let scenario = Scenario::load(&scenario)?;
            let opts = RunOptions { out: cli.out, envelope_slack: slack, full_snapshots };
            let report = commands::run(scenario, &opts)?;
            if !cli.quiet || !report.passed() {
                println!("{report}");
            }
            Ok(report.passed())
        }
        Command::Check { seed, slack, inject_fault } => {
            let (lines, ok) = commands::default_check(seed, slack, inject_fault);
            print(&lines, cli.quiet && ok);
            Ok(ok)
        }
        Command::Convergence { scenario, levels } => {
            let scenario = Scenario::load(&scenario)?;
            let (lines, ok) = commands::convergence(&scenario, levels, &cli.out)?;
            print(&lines, cli.quiet && ok);
            Ok(ok)
        }
        Command::Critical { length, bound, tol } => {
            print(&commands::critical(length, bound, tol)?, cli.quiet);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("kdvsat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
