use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod error;
mod experiments;
mod output;
mod spec;

use commands::{CheckArgs, EvalArgs, OptimizeArgs};
use experiments::ExperimentArgs;

/// Shape optimization on the manifold of planar triangular meshes.
#[derive(Debug, Parser)]
#[command(name = "meshshape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// Parsed once; boxing the big variant buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Subcommand)]
enum Command {
    /// Print mesh statistics and test admissibility.
    Check(CheckArgs),
    /// Run one steepest-descent optimization.
    Optimize(OptimizeArgs),
    /// Reproduce one of the numerical experiments.
    Experiment(ExperimentArgs),
    /// Evaluate the penalty, quality monitor, objective or a gradient check.
    Eval(EvalArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Check(a) => commands::check(&a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Experiment(a) => experiments::experiment(&a),
        Command::Eval(a) => commands::eval(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
