//! `multibump` command line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;

use commands::*;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] multibump::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(e) => e.exit_code() as u8,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "multibump", version, about = "Multi-bump solutions of Delta u - u + u^p = 0 in the plane")]
struct Cli {
    /// JSON file with the run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Homoclinic profile, principal eigenpair and integral constants.
    Profile(ProfileArgs),
    /// Toda trajectories and their asymptotic data.
    Toda(TodaArgs),
    /// Continuation of the periodic Dancer branch.
    Dancer(DancerArgs),
    /// Assemble the multi-bump approximation and its error.
    Ansatz(AnsatzArgs),
    /// Weighted error of the approximation across several alpha.
    ResidualSweep(SweepArgs),
    /// Kernel, linearized Toda and resonance solver checks.
    LinearCheck(LinearArgs),
    /// Fixed-point iteration of the reduced equations.
    Reduce(ReduceArgs),
    /// Newton correction of the approximation to a solution.
    Solve(SolveArgs),
}

fn init_threads() -> Result<usize, CliError> {
    if let Ok(v) = std::env::var("MULTIBUMP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("MULTIBUMP_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = init_threads()?;
    let file: Option<Value> = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))?)
        }
        None => None,
    };
    let ctx = Ctx { out: cli.out, file, threads, start: Instant::now() };
    match &cli.command {
        Command::Profile(a) => profile(&ctx, a),
        Command::Toda(a) => toda(&ctx, a),
        Command::Dancer(a) => dancer(&ctx, a),
        Command::Ansatz(a) => ansatz(&ctx, a),
        Command::ResidualSweep(a) => residual_sweep(&ctx, a),
        Command::LinearCheck(a) => linear_check(&ctx, a),
        Command::Reduce(a) => reduce(&ctx, a),
        Command::Solve(a) => solve(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
