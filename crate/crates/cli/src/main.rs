mod config;
mod error;
mod explain;
mod ops;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Operation};
use error::CliError;

/// Unadjusted Langevin sampling with explicit total-variation certificates.
#[derive(Parser)]
#[command(name = "ulatv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step size and iteration count for a target precision or a fixed budget.
    Plan(RunArgs),
    /// Evaluate the certified TV bound curve for a schedule.
    Certify(RunArgs),
    /// Run a ULA chain ensemble and record moment estimates.
    Sample(RunArgs),
    /// Simulate a reflection coupling and compare its tail with the analytic bounds.
    Couple(RunArgs),
    /// Compare the certified bound with the 1-D grid oracle.
    Validate(RunArgs),
    /// Fit how the planned step size and iteration count scale with dimension.
    Scaling(RunArgs),
    /// Print every constant behind a certificate with the formula that produced it.
    Explain(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the sampler and coupling simulations.
    #[arg(long)]
    workers: Option<usize>,
}

fn run(op: Operation, args: &RunArgs) -> Result<bool, CliError> {
    let bytes = std::fs::read(&args.config).map_err(|e| CliError::Io(format!("cli: cannot read {}: {e}", args.config.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::config("config is not valid UTF-8"))?;
    let cfg = ExperimentConfig::parse(text)?;
    cfg.check(op)?;
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size the worker pool: {e}")))?;
    }
    let out = ops::execute(op, &cfg)?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    output::write_artifacts(&dir, op, &bytes, &out)?;
    for line in &out.report {
        println!("{line}");
    }
    for f in &out.failures {
        eprintln!("validation failure: {f}");
    }
    Ok(out.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (op, args) = match &cli.command {
        Command::Plan(a) => (Operation::Plan, a),
        Command::Certify(a) => (Operation::Certify, a),
        Command::Sample(a) => (Operation::Sample, a),
        Command::Couple(a) => (Operation::Couple, a),
        Command::Validate(a) => (Operation::Validate, a),
        Command::Scaling(a) => (Operation::Scaling, a),
        Command::Explain(a) => (Operation::Explain, a),
    };
    match run(op, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
