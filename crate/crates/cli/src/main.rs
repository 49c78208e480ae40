mod commands;
mod config;
mod errors;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::bench::BenchArgs;
use commands::decompose::DecomposeArgs;
use commands::ip_demo::IpDemoArgs;
use commands::train::{EvaluateArgs, TrainArgs};

/// Orthogonal neural networks on simulated unary quantum circuits.
#[derive(Parser, Debug)]
#[command(name = "orthonn", version)]
struct Cli {
    /// TOML file whose keys mirror the long flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a network; writes model.txt, history.csv, timing.csv, metrics.json.
    Train(TrainArgs),
    /// Score a saved model on a dataset; writes metrics.json.
    Evaluate(EvaluateArgs),
    /// Time pyramid training per epoch for [n,n,2] networks and fit a quadratic.
    BenchScaling(BenchArgs),
    /// Decompose an orthogonal matrix into pyramid angles.
    Decompose(DecomposeArgs),
    /// Estimate an inner product with the shot-based circuits.
    IpDemo(IpDemoArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = serde_json::json!({
                "error": "validation",
                "kind": "Usage",
                "field": null,
                "message": e.render().to_string().trim(),
            });
            eprintln!("{body}");
            return ExitCode::from(errors::EXIT_VALIDATION as u8);
        }
    };
    let config = cli.config.as_deref();
    let result = match &cli.command {
        Command::Train(a) => commands::train::run(a, config),
        Command::Evaluate(a) => commands::train::evaluate(a, config),
        Command::BenchScaling(a) => commands::bench::run(a, config),
        Command::Decompose(a) => commands::decompose::run(a, config),
        Command::IpDemo(a) => commands::ip_demo::run(a, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, body) = errors::report(&e);
            eprintln!("{body}");
            ExitCode::from(code as u8)
        }
    }
}
