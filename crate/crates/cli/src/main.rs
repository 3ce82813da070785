//! `polymor`: batch driver for generating benchmarks, reducing them, and
//! comparing reduced against full simulations.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};

#[derive(Parser)]
#[command(name = "polymor", version, about = "Interpolatory model reduction of polynomial systems")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark generators.
    Benchmark {
        #[command(subcommand)]
        action: BenchmarkAction,
    },
    /// Build interpolation bases, the Loewner pencil, and the reduced model.
    Reduce(Flags),
    /// Integrate a full or reduced model.
    Simulate(Flags),
    /// Simulate the full model against reduced models and report errors.
    Compare(Flags),
    /// Relative singular values of the Loewner pencil.
    Svd(Flags),
    /// Evaluate transfer functions on diagonal frequency tuples.
    Tf(Flags),
}

#[derive(Subcommand)]
enum BenchmarkAction {
    /// Write a benchmark system to `<out>/system`.
    Gen(Flags),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let (name, flags, run): (&str, &Flags, fn(&RunConfig) -> anyhow::Result<()>) = match &cli.command {
        Command::Benchmark {
            action: BenchmarkAction::Gen(f),
        } => ("benchmark gen", f, commands::benchmark_gen),
        Command::Reduce(f) => ("reduce", f, commands::reduce),
        Command::Simulate(f) => ("simulate", f, commands::simulate),
        Command::Compare(f) => ("compare", f, commands::compare),
        Command::Svd(f) => ("svd", f, commands::svd),
        Command::Tf(f) => ("tf", f, commands::tf),
    };
    let result = RunConfig::assemble(name, flags)
        .and_then(RunConfig::resolve)
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
