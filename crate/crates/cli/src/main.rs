mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};
use qtensor::fields::{set_reduction_mode, ReductionMode};

use commands::{CliError, Refinement};
use config::{RawConfig, RunConfig, DEFAULT_SEED};

/// Energy-stable Q-tensor gradient flow solver.
#[derive(Parser, Debug)]
#[command(name = "qtensor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for stencils and ladder runs.
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,

    /// Fixed-order reductions: identical input gives byte-identical output.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Seed for the verification battery (overrides `seed`).
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Run one experiment, writing the energy history and snapshots.
    Run,
    /// Spatial refinement study against a fine reference.
    ConvergenceSpace,
    /// Temporal refinement study against a fine reference.
    ConvergenceTime,
    /// Property battery: summation by parts, operator, runs, Lipschitz.
    Verify,
}

fn raw_config(cli: &Cli) -> Result<RawConfig, CliError> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    for pair in &cli.set {
        raw.set(pair)?;
    }
    Ok(raw)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let raw = raw_config(cli)?;
    if cli.command == Command::Verify {
        let seed = match cli.seed {
            Some(s) => s,
            None => raw.seed()?.unwrap_or(DEFAULT_SEED),
        };
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        info!("verify: seed {seed}");
        return commands::verify(seed, &out);
    }
    let mut cfg = RunConfig::resolve(&raw, cli.out.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.resolved.retain(|(k, _, _)| k != "seed");
        cfg.resolved.push(("seed".into(), s.to_string(), config::Source::Flag));
    }
    for line in cfg.echo() {
        info!("{line}");
    }
    match cli.command {
        Command::Run => {
            let s = commands::run(&cfg)?;
            println!(
                "{} steps: energy {:.10e} -> {:.10e}, max |dissipation residual| {:.3e}, {} snapshot(s)",
                s.steps, s.initial_energy, s.final_energy, s.max_residual, s.snapshots
            );
        }
        Command::ConvergenceSpace => print!("{}", commands::convergence(&cfg, Refinement::Space)?),
        Command::ConvergenceTime => print!("{}", commands::convergence(&cfg, Refinement::Time)?),
        Command::Verify => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Some(k) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            error!("cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    set_reduction_mode(if cli.deterministic {
        ReductionMode::Deterministic
    } else {
        ReductionMode::Parallel
    });
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
