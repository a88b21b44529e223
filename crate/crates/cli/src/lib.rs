//! Command implementations behind the `gibbs-bounds` binary.
//!
//! Every command returns the files it would write as [`Artifact`]s, so the same code
//! serves the binary, the tests and the acceptance harness.

pub mod commands;
pub mod config;
pub mod reproduce;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use gibbs_bounds::Error;

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 1 for usage errors, 2 for a violated inhibition hypothesis, 3 for sampler
    /// non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.root() {
                Error::NotInhibitory(_) => 2,
                Error::NonConvergence { .. } => 3,
                _ => 1,
            },
        }
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.bytes).expect("artifacts are UTF-8")
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gibbs-bounds",
    version,
    about = "Bounds, simulation and estimation for inhibitory pairwise interaction point processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; standard output when omitted and only one file is produced.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reduced replicate budgets for `reproduce`.
    #[arg(long, global = true)]
    pub fast: bool,
    /// Worker threads. Changes wall time only, never results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic bounds for the configured statistic.
    Bounds,
    /// Simulates one pattern and writes it with a JSON sidecar.
    Simulate,
    /// Estimates the configured statistic from replicates or from a saved pattern.
    Estimate {
        /// Pattern CSV written by `simulate`.
        #[arg(long)]
        pattern: Option<PathBuf>,
    },
    /// Regenerates the tables behind one of the four figures.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        figure: u8,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --config <path>".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs a parsed command and returns its artifacts.
pub fn execute(cli: &Cli) -> Result<Vec<Artifact>, CliError> {
    let job = || match &cli.command {
        Command::Bounds => commands::cmd_bounds(&load_config(cli)?),
        Command::Simulate => commands::cmd_simulate(&load_config(cli)?),
        Command::Estimate { pattern } => commands::cmd_estimate(&load_config(cli)?, pattern.as_deref()),
        Command::Reproduce { figure } => reproduce::cmd_reproduce(
            *figure,
            &reproduce::Budget::new(cli.fast),
            cli.seed.unwrap_or(reproduce::DEFAULT_SEED),
        ),
    };
    with_threads(cli.threads, job)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError>
where
    T: Send,
{
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(f),
    }
}

/// Writes artifacts under `out`, or to standard output when there is no directory.
pub fn deliver(artifacts: &[Artifact], out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            let mut written = Vec::with_capacity(artifacts.len());
            for a in artifacts {
                let path = dir.join(&a.name);
                std::fs::write(&path, &a.bytes).map_err(Error::from)?;
                written.push(path);
            }
            Ok(written)
        }
        None if artifacts.len() == 1 => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&artifacts[0].bytes).map_err(Error::from)?;
            Ok(Vec::new())
        }
        None => Err(CliError::Usage(format!(
            "{} output files; pass --out <dir>",
            artifacts.len()
        ))),
    }
}
