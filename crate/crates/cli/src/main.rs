use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdslab::harness::{
    run_experiment, run_transfer_panel, sweep, ExperimentConfig, ExperimentKind, RunResult,
};
use pdslab::Error;

#[derive(Parser)]
#[command(
    name = "pdslab",
    version,
    about = "Positive-distribution-shift experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment kind.
    Run(RunArgs),
    /// Run a `sweep` config.
    Sweep(RunArgs),
    /// Run a `transfer-panel` config.
    Transfer(RunArgs),
    /// Check a config without running it.
    ValidateConfig {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Print the experiment kinds.
    ListExperiments,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides the master seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; defaults to the config's `out`, then `PDSLAB_OUT`, then `runs`.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::Config(format!("cannot read {}: {io}", path.display())),
        e => Failure::Config(e.to_string()),
    })
}

fn execute(
    args: RunArgs,
    runner: fn(&ExperimentConfig) -> pdslab::Result<RunResult>,
) -> Result<(), Failure> {
    let mut cfg = load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    let result = runner(&cfg).map_err(|e| match e {
        Error::Config { .. } => Failure::Config(e.to_string()),
        e => Failure::Runtime(e.to_string()),
    })?;
    let s = &result.summary;
    eprintln!(
        "{}: {} succeeded, {} failed, {} non-converged in {} ms",
        s.kind, s.succeeded, s.failed, s.non_converged, s.wall_ms
    );
    println!("{}", result.summary_path().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => execute(args, run_experiment),
        Command::Sweep(args) => execute(args, sweep),
        Command::Transfer(args) => execute(args, run_transfer_panel),
        Command::ValidateConfig { config } => load(&config).map(|cfg| {
            println!(
                "ok: {} (d={}, k={}, {} trial(s))",
                cfg.kind, cfg.d, cfg.k, cfg.trials
            );
        }),
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!("{kind}");
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
