//! `nqs`: runs a JSON config through one of the drivers.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nqs_core::io::config::{read_config, run};
use nqs_core::parallel::{with_workers, workers_from_env};
use nqs_core::{Error, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "nqs", version, about = "Variational Monte Carlo with neural-network quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state search.
    Vmc(RunArgs),
    /// Fit a machine to a target wavefunction.
    Supervised(RunArgs),
    /// Reconstruct a state from measurement records.
    Qsr(RunArgs),
    /// Exact diagonalization or imaginary-time propagation.
    Ed(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output prefix.
    #[arg(long)]
    output_prefix: Option<PathBuf>,
}

fn execute(name: &str, args: &RunArgs) -> Result<Value> {
    let mut cfg = read_config(&args.config)?;
    if cfg.driver.name() != name {
        return Err(Error::Config {
            path: "driver.kind".into(),
            message: format!("config runs the {} driver, not {name}", cfg.driver.name()),
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(prefix) = &args.output_prefix {
        cfg.output_prefix = Some(prefix.clone());
    }
    with_workers(workers_from_env()?, || run(&cfg))?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Vmc(a) => ("vmc", a),
        Command::Supervised(a) => ("supervised", a),
        Command::Qsr(a) => ("qsr", a),
        Command::Ed(a) => ("ed", a),
    };
    match execute(name, args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}
