//! Config-driven scenario runner.
//!
//! Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 config
//! parse/validation problem, 3 numerical domain failure.

use clap::{Args, Parser, Subcommand};
use glspace::scenario::{run_config, RunError, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "glspace",
    about = "Scenario runner for generalized Lagrange geometry: direction energies, \
first-order systems, orbit flows and field-equation residuals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its report and tables.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output.dir or "out".
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override every grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Override every tolerance with one value.
    #[arg(long)]
    tol: Option<f64>,
    /// Also write plot-ready CSV tables (no rendering).
    #[arg(long, default_value_t = false)]
    emit_plots: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(args),
    }
}

fn run(args: RunArgs) -> ExitCode {
    let mut cfg = match ScenarioConfig::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(k) = args.grid {
        cfg.override_grid(k);
    }
    if let Some(eps) = args.tol {
        cfg.tolerances.override_all(eps);
    }
    if args.emit_plots {
        cfg.output.emit_plots = true;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let out_dir = args
        .out
        .or_else(|| cfg.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match run_config(&cfg, &out_dir) {
        Ok(report) => {
            print!("{}", report.to_text());
            println!("report written to {}", out_dir.display());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical { location, source }) => {
            eprintln!("numerical error in {location}: {source}");
            ExitCode::from(3)
        }
        Err(RunError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(2)
        }
    }
}
