//! Batch experiment runner: deterministic replica orchestration, JSON
//! reports, CSV data files and SVG figures for every verification the
//! suite performs.
//!
//! Exit codes: 0 when every declared tolerance was met, 1 on a statistical
//! failure, 2 on configuration or usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trap_model_cli::config::{Experiment, ExperimentConfig, ALL_EXPERIMENTS};
use trap_model_cli::experiments::{self, RunContext, RunError};
use trap_model_cli::par;

#[derive(Parser)]
#[command(
    name = "trap-model",
    about = "Simulation laboratory for heavy-tailed trap dynamics and the fractional-kinetics limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report, data and plots.
    Run {
        /// Experiment name (see `list`).
        experiment: String,
        /// JSON configuration file; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread budget (0 = automatic).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (default `runs/<experiment>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate experiments with their parameter schemas.
    List,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            for e in ALL_EXPERIMENTS {
                println!("{}", ExperimentConfig::schema_line(e));
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            experiment,
            config,
            seed,
            threads,
            out,
        } => match run_command(&experiment, config, seed, threads, out) {
            Ok(passed) => {
                if passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(err) => {
                eprintln!("{err}");
                ExitCode::from(2)
            }
        },
    }
}

fn run_command(
    experiment: &str,
    config: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<bool, RunError> {
    let experiment: Experiment = experiment.parse().map_err(RunError::Usage)?;
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                RunError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| RunError::Usage(format!("invalid config: {e}")))?
        }
        None => ExperimentConfig::defaults_for(experiment),
    };
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    if let Some(threads) = threads {
        cfg.threads = threads;
    }
    let out_dir = out
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(experiment.name()));
    std::fs::create_dir_all(&out_dir)?;
    let ctx = RunContext {
        pool: par::build_pool(cfg.threads),
        out_dir: out_dir.clone(),
    };
    let report = experiments::run(experiment, &cfg, &ctx)?;
    report.print_summary();
    let path = report.write_json(&out_dir)?;
    println!("report: {}", path.display());
    Ok(report.passed)
}
