mod commands;
mod config;
mod table;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{Format, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Qubit Pauli-channel tomography: simulation, estimation risk and
/// experiment design.
#[derive(Parser)]
#[command(name = "pauli-tomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Sample counts and estimate the channel.
    Simulate,
    /// Analytic losses, plus Monte-Carlo losses when trials > 0.
    Risk,
    /// Search for the design minimizing the angle loss.
    Optimize,
    /// Align the design with a first rough estimate, then estimate again.
    TwoStep,
    /// Run every acceptance check and report pass/fail.
    Reproduce,
}

/// Flags override the corresponding config fields.
#[derive(Args)]
struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output file (stdout if absent).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Shorthand for `--format json`.
    #[arg(long, global = true, conflicts_with = "format")]
    json: bool,
    #[arg(long, global = true, value_name = "U64")]
    trials: Option<u64>,
    /// Also write every grid node of the design search.
    #[arg(long, global = true)]
    emit_surface: bool,
    /// Solve the two-angle problem with λ₃ = 0.
    #[arg(long, global = true)]
    planar: bool,
}

fn resolve(flags: &Flags) -> Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &flags.out {
        cfg.out = Some(out.clone());
    }
    if let Some(format) = flags.format {
        cfg.format = format;
    }
    if flags.json {
        cfg.format = Format::Json;
    }
    if let Some(trials) = flags.trials {
        cfg.trials = trials;
    }
    cfg.emit_surface |= flags.emit_surface;
    cfg.planar |= flags.planar;
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("PAULI_TOMO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("PAULI_TOMO_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let cfg = resolve(&cli.flags)?;
    let (report, passed) = match cli.command {
        Command::Simulate => (commands::simulate(&cfg)?, true),
        Command::Risk => (commands::risk(&cfg)?, true),
        Command::Optimize => (commands::optimize(&cfg)?, true),
        Command::TwoStep => (commands::two_step(&cfg)?, true),
        Command::Reproduce => commands::reproduce(),
    };
    table::emit(&report, &cfg)?;
    Ok(passed)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
