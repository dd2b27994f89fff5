//! `firegrad`: simulate, calibrate, score and benchmark wildfire spread.

mod commands;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use firegrad_core::Error;

use settings::RunArgs;

#[derive(Debug, Parser)]
#[command(
    name = "firegrad",
    version,
    about = "Differentiable cellular-automata wildfire simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the forward model and write snapshots, final grids and counts
    Simulate(RunArgs),
    /// Fit c1, c2, a and p_h to an observation schedule
    Calibrate(RunArgs),
    /// Score predicted burn maps against targets
    Metrics(MetricsArgs),
    /// Time forward-only runs across map sizes and thread counts
    Bench(BenchArgs),
    /// Write a synthetic landscape and the observations of a known-parameter run
    MakeTwin(RunArgs),
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Predicted boolean grid; repeat once per observation
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Target boolean grid, paired with --pred in order
    #[arg(long, required = true)]
    pub target: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Map side lengths
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    /// Thread counts
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write `size,threads,hash` of every final state here
    #[arg(long)]
    pub hashes: Option<PathBuf>,
}

/// Failure classes and their exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Usage = 2,
    Input = 3,
    Io = 4,
    Validation = 5,
    Resource = 6,
}

#[derive(Debug)]
pub struct Failure {
    pub class: Class,
    pub message: String,
}

impl Failure {
    pub fn new(class: Class, message: impl Into<String>) -> Self {
        Self {
            class,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(Class::Input, message)
    }

    pub fn from_core(e: Error) -> Self {
        let class = match &e {
            Error::Io(_) | Error::MissingFile(_) => Class::Io,
            Error::InvalidLandscape(_) | Error::NonFinite(_) => Class::Validation,
            _ => Class::Input,
        };
        Self::new(class, e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("firegrad: error: {}", one_line(msg));
            return ExitCode::from(Class::Usage as u8);
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Calibrate(args) => commands::calibrate(args),
        Command::Metrics(args) => commands::metrics(args),
        Command::Bench(args) => commands::bench(args),
        Command::MakeTwin(args) => commands::make_twin(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("firegrad: error: {}", one_line(&f.message));
            ExitCode::from(f.class as u8)
        }
    }
}
