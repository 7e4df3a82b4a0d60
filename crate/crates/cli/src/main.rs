//! ep-nozzle: batch front end for the steady subsonic Euler-Poisson
//! nozzle solver.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 solver did not converge,
//! 4 physics-regime error (vacuum / ellipticity / flux), 5 I/O error.
//! EP_NOZZLE_THREADS caps internal parallelism.

mod commands;
mod config;
mod manifest;
mod svg;

use clap::{Args, Parser, Subcommand};
use commands::CliError;
use config::RunConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "ep-nozzle", version, about = "steady subsonic Euler-Poisson nozzle flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides out_dir from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid override, e.g. 128x64.
    #[arg(long)]
    grid: Option<String>,
    /// Set all five perturbation amplitudes to this value.
    #[arg(long)]
    amplitude: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the 1D background state and export profiles.
    Background(Common),
    /// Run the full nonlinear solve and export fields and reports.
    Solve(Common),
    /// Recompute verification residuals from a previous solve's fields.
    Verify(Common),
    /// Run one solve per amplitude and tabulate deviation norms.
    Sweep(Common),
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(grid) = &common.grid {
        let (a, b) = grid
            .split_once('x')
            .ok_or_else(|| CliError::Config(format!("--grid expects N1xN2, got {grid:?}")))?;
        cfg.n1 = a
            .parse()
            .map_err(|_| CliError::Config(format!("--grid: bad N1 {a:?}")))?;
        cfg.n2 = b
            .parse()
            .map_err(|_| CliError::Config(format!("--grid: bad N2 {b:?}")))?;
        if cfg.n1 < 8 || cfg.n2 < 8 {
            return Err(CliError::Config("grid must be at least 8x8".into()));
        }
    }
    if let Some(a) = common.amplitude {
        cfg.amplitudes = ep_core::solver::PerturbationAmplitudes::uniform(a);
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .ok_or_else(|| CliError::Config("no output directory (--out or out_dir)".into()))?;
    Ok((cfg, out))
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Background(common) => {
            let (cfg, out) = load(common)?;
            commands::cmd_background(&cfg, &out)
        }
        Command::Solve(common) => {
            let (cfg, out) = load(common)?;
            commands::cmd_solve(&cfg, &out).map(|_| ())
        }
        Command::Verify(common) => {
            let (cfg, out) = load(common)?;
            commands::cmd_verify(&cfg, &out)
        }
        Command::Sweep(common) => {
            let (cfg, out) = load(common)?;
            commands::cmd_sweep(&cfg, &out)
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("ep-nozzle: {e}");
        std::process::exit(e.exit_code());
    }
}
