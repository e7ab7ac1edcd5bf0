//! Batch front end: capacity reports, exponent sweeps, simulations and
//! verification suites, emitted as CSV or JSON.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use clap::{Parser, Subcommand};
use config::{LoadedConfig, Units};
use error::{CliError, CliResult};
use std::path::PathBuf;

/// Default seed when neither the config nor `--seed` supplies one.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "grandab", version, about = "Guessing-based decoding with abandonment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output units; defaults to the config's units.
    #[arg(long, global = true, value_enum)]
    pub units: Option<Units>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Capacity, CAID, equivocation and dispersion.
    Capacity,
    /// Exponent curves over a rate grid.
    Exponents,
    /// Monte Carlo error probabilities at second-order or fixed rates.
    Simulate,
    /// Exhaustive checks of the ranking and estimator machinery.
    Verify,
}

/// Runs a parsed invocation and writes its output. A failed verification
/// still writes its report before returning the error.
pub fn run(cli: &Cli) -> CliResult<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let loaded = LoadedConfig::load(path)?;
    let out = cli.out.clone().or_else(|| loaded.config.output_path.clone());
    let go = || execute(cli.command, &loaded, cli.seed, cli.units);
    let result = match cli.threads {
        Some(0) => return Err(CliError::Validation("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    };
    match result {
        Ok(text) => emit(&text, out.as_ref()),
        Err(CliError::Verification(report)) => {
            emit(&report, out.as_ref())?;
            Err(CliError::Verification("one or more suites reported violations".into()))
        }
        Err(e) => Err(e),
    }
}

pub fn execute(command: Command, loaded: &LoadedConfig, seed: Option<u64>, units: Option<Units>) -> CliResult<String> {
    let cfg = &loaded.config;
    let units = units.unwrap_or(cfg.units);
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let meta = |command| commands::Meta {
        command,
        config_hash: loaded.hash(),
        seed,
        units,
    };
    match command {
        Command::Capacity => {
            let report = commands::capacity(cfg, units)?;
            Ok(serde_json::to_string_pretty(&report).expect("plain data") + "\n")
        }
        Command::Exponents => commands::exponents(cfg, &meta("exponents")),
        Command::Simulate => commands::simulate(cfg, &meta("simulate")),
        Command::Verify => {
            let report = verify::run(&cfg.verify, seed);
            let text = serde_json::to_string_pretty(&report).expect("plain data") + "\n";
            if report.passed {
                Ok(text)
            } else {
                Err(CliError::Verification(text))
            }
        }
    }
}

/// Writes `text` to `out`, or the config's `output_path`, or stdout.
pub fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
