//! Config-driven experiment runner for the vito numerical laboratory.
//!
//! Exit codes: 0 success, 2 configuration or environment error, 3 numerical
//! failure (solver no-contraction, estimator breakdown).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod output;
mod runner;

use config::ExperimentConfig;
use runner::CliError;

/// Default output directory environment variable.
const OUT_ENV: &str = "VITO_OUT";

#[derive(Parser)]
#[command(name = "vito", about = "Experiment runner: simulation, occupation \
measures, regularity fits, Young integration, self-interacting equations")]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (default: $VITO_OUT, then the working directory).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Rayon worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Progress notes on stderr.
    #[arg(long)]
    verbose: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        CliError::validation(format!("cannot read {}: {e}", cli.config.display()))
    })?;
    let mut cfg = ExperimentConfig::parse(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", cli.config.display())))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", out_dir.display())))?;
    let summary = runner::run_experiment(&cfg, &out_dir, cli.verbose)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
