//! `advhyp`: command-line front end of the experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use advhyp_cli::error::{EXIT_CERTIFICATE, EXIT_OK};
use advhyp_cli::run::write_output;
use advhyp_cli::{run, CliError, ExperimentConfig, LogBase, Mode, Overrides};
use clap::Parser;

/// Solve, simulate and audit adversarial hypothesis-testing instances.
///
/// Exit status: 0 success (audit findings included), 1 output not
/// writable, 2 certificate failure, 3 invalid input, 4 non-convergence.
#[derive(Debug, Parser)]
#[command(name = "advhyp", version)]
struct Args {
    /// TOML manifest; relative instance paths in it are resolved against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Episodes per sample length and side.
    #[arg(long)]
    trials: Option<u64>,
    /// Sample length; repeat for several.
    #[arg(long = "n")]
    n: Vec<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Unit of reported entropic values.
    #[arg(long, value_enum)]
    log_base: Option<LogBase>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn execute(args: Args) -> Result<bool, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(Overrides {
        mode: args.mode,
        seed: args.seed,
        trials: args.trials,
        n: args.n,
        epsilon: args.epsilon,
        log_base: args.log_base,
        out_json: args.out_json,
        out_csv: args.out_csv,
        tol: args.tol,
    });
    let outcome = run(&cfg)?;
    let json = serde_json::to_string_pretty(&outcome.json).expect("reports serialize") + "\n";
    match &cfg.out_json {
        Some(path) => write_output(&cfg.path(path), &json)?,
        None => print!("{json}"),
    }
    if let (Some(path), Some(csv)) = (&cfg.out_csv, &outcome.csv) {
        write_output(&cfg.path(path), csv)?;
    }
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    Ok(outcome.certified)
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => {
            eprintln!("error: an optimality certificate failed");
            ExitCode::from(EXIT_CERTIFICATE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
