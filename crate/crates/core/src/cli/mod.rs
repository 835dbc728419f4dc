//! Command-line front end: `simulate`, `decompose`, `wq` and `rates`.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Command, RunConfig, SystemName, WqSolver, DEFAULT_OUT_DIR, OUT_DIR_ENV};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "wiprates", version, about = "Invariance-principle rate experiments for intermittent maps and suspension flows")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Sample W_n paths and write one wide CSV per n.
    Simulate(Options),
    /// Martingale-coboundary decomposition on an Ulam grid.
    Decompose(Options),
    /// Distance between two sample files written by `simulate`.
    Wq(Options),
    /// Full rate table and log-log fit.
    Rates(Options),
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [env: WIPRATES_OUT_DIR; default: wiprates-out].
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    pub threads: Option<usize>,

    /// doubling | lsv | induced
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// constant:<h> | one_plus_y
    #[arg(long)]
    pub roof: Option<String>,
    /// cos | linear | cos_blend | zero | const:<c>
    #[arg(long)]
    pub observable: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,

    /// Comma-separated, strictly increasing horizons.
    #[arg(long)]
    pub n: Option<String>,
    /// Samples per n.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub grid_m: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// free | half | zero
    #[arg(long)]
    pub fit: Option<String>,
    /// ulam | green_kubo | fixed:<value>
    #[arg(long)]
    pub variance: Option<String>,
    #[arg(long)]
    pub green_kubo_steps: Option<usize>,
    #[arg(long)]
    pub centering_budget: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<usize>,

    #[arg(long)]
    pub ulam_n: Option<usize>,
    /// base | suspension
    #[arg(long)]
    pub layout: Option<String>,
    #[arg(long)]
    pub height_cells: Option<usize>,
    #[arg(long)]
    pub series_tol: Option<f64>,
    #[arg(long)]
    pub density_tol: Option<f64>,
    #[arg(long)]
    pub max_terms: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,

    /// First sample file for `wq`.
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Second sample file for `wq`.
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// assignment | sorted | entropic
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

/// Parses arguments into a resolved configuration.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(ParseFailure::Clap)?;
    let (command, opts) = match cli.command {
        Sub::Simulate(o) => (Command::Simulate, o),
        Sub::Decompose(o) => (Command::Decompose, o),
        Sub::Wq(o) => (Command::Wq, o),
        Sub::Rates(o) => (Command::Rates, o),
    };
    RunConfig::resolve(command, &opts).map_err(ParseFailure::Config)
}

#[derive(Debug)]
pub enum ParseFailure {
    /// Help, version or a malformed command line.
    Clap(clap::Error),
    Config(Error),
}

/// Runs the program and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_config(args) {
        Ok(c) => c,
        Err(ParseFailure::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
        Err(ParseFailure::Config(e)) => {
            eprintln!("wiprates: {e}");
            return e.exit_code();
        }
    };
    match commands::dispatch(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wiprates: {e}");
            e.exit_code()
        }
    }
}
