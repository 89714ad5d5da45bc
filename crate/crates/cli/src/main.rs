//! `meantest`: run the split-sample Gaussian mean tester on data files and
//! drive the Monte Carlo experiments.
//!
//! Exit status is 0 for ACCEPT (or a successful non-test command), 1 for
//! REJECT and 2 for any error, including unknown flags.

mod commands;
mod formats;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meantest_core::DEFAULT_C_STAR;

use crate::formats::Format;

#[derive(Debug, Parser)]
#[command(name = "meantest", version, about = "Split-sample Gaussian mean tester")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test whether a sample file looks like N(0, I) or has mean norm >= epsilon.
    Test(TestArgs),
    /// Run an experiment plan and write results, a manifest and plot data.
    Simulate(SimulateArgs),
    /// Draw samples from a distribution spec into a data file.
    Generate(GenerateArgs),
    /// Estimate the small-ball constant for a list of distribution specs.
    CalibrateCstar(CalibrateArgs),
    /// Search for the smallest per-half sample size that meets a target rate.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Sample file, one row per sample.
    file: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long = "c-star", default_value_t = DEFAULT_C_STAR)]
    c_star: f64,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Sample dimension (required for raw input, checked for CSV).
    #[arg(long)]
    dim: Option<usize>,
    /// Print the decision as JSON instead of the human report.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment plan (JSON).
    plan: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Overrides the plan's base seed.
    #[arg(long, env = "MEANTEST_SEED")]
    seed: Option<u64>,
    /// Overrides the plan's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Print the result as JSON instead of the summary table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Distribution spec (JSON).
    spec: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, env = "MEANTEST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// JSON array of distribution specs with nonzero means.
    specs: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    trials: usize,
    #[arg(long, env = "MEANTEST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    epsilon: f64,
    /// Required completeness and soundness rate, in (0.5, 1).
    #[arg(long, default_value_t = 2.0 / 3.0)]
    target: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, env = "MEANTEST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(args) => commands::test(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Generate(args) => commands::generate(args),
        Command::CalibrateCstar(args) => commands::calibrate(args),
        Command::Complexity(args) => commands::complexity(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
