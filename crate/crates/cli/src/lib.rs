//! Experiment runner: loads a configuration, fans Monte Carlo trials out to a
//! worker pool and writes CSV tables plus a replay record.
//!
//! Every random draw comes from substream `tag << 40 | index` of the run seed,
//! where `tag` names the experiment and `index` the trial or sweep point, so
//! results do not depend on the number of workers.

pub mod config;
mod experiments;
mod figures;
pub mod output;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Input(superres_core::Error),
    #[error("numerical failure: {0}")]
    Numerical(superres_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl From<superres_core::Error> for CliError {
    fn from(e: superres_core::Error) -> Self {
        use superres_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::ParaxialViolation { .. }
            | E::WeightNormalization(_)
            | E::InsufficientSamples { .. }
            | E::EmptyCounts => CliError::Input(e),
            _ => CliError::Numerical(e),
        }
    }
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Entropy,
    Discriminate,
    Estimate,
    ThermalCheck,
    Figure(FigureKind),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Entropy => "entropy",
            Command::Discriminate => "discriminate",
            Command::Estimate => "estimate",
            Command::ThermalCheck => "thermal-check",
            Command::Figure(FigureKind::Fig4) => "figure fig4",
            Command::Figure(FigureKind::Fig5) => "figure fig5",
            Command::Figure(FigureKind::Fig6) => "figure fig6",
            Command::Figure(FigureKind::Fig7) => "figure fig7",
            Command::Figure(FigureKind::All) => "figure all",
        }
    }
}

/// Flags that shape presentation only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Report entropies in bits instead of nats.
    pub bits: bool,
}

/// Result of a run: aggregate numbers, files written and timing.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Command,
    pub config_hash: String,
    pub seed: u64,
    pub values: BTreeMap<String, f64>,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub duration: Duration,
}

impl RunReport {
    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (config {}, seed {})", self.command.name(), &self.config_hash[..12], self.seed)?;
        for l in &self.lines {
            writeln!(f, "  {l}")?;
        }
        for p in &self.files {
            writeln!(f, "  wrote {}", p.display())?;
        }
        write!(f, "  elapsed {:.2}s", self.duration.as_secs_f64())
    }
}

/// Partial report assembled by a subcommand.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    values: BTreeMap<String, f64>,
    lines: Vec<String>,
    files: Vec<PathBuf>,
}

impl Outcome {
    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }
    fn line(&mut self, l: impl Into<String>) {
        self.lines.push(l.into());
    }
    fn merge(&mut self, other: Outcome) {
        self.values.extend(other.values);
        self.lines.extend(other.lines);
        self.files.extend(other.files);
    }
}

/// Substream for `index` within experiment `tag`.
pub fn substream(tag: u64, index: u64) -> u64 {
    (tag << 40) | index
}

pub(crate) fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.run.workers {
        b = b.num_threads(w);
    }
    Ok(b.build()?)
}

/// Execute `cmd` and write its outputs under `cfg.run.output_dir`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let dir = cfg.run.output_dir.clone();
    output::ensure_dir(&dir)?;
    let mut out = match cmd {
        Command::Entropy => experiments::entropy(cfg, opts)?,
        Command::Discriminate => experiments::discriminate(cfg)?,
        Command::Estimate => experiments::estimate(cfg)?,
        Command::ThermalCheck => experiments::thermal_check(cfg)?,
        Command::Figure(kind) => figures::figure(kind, cfg)?,
    };
    let hash = cfg.hash();
    out.files.push(output::write_schema(&dir)?);
    let meta = output::write_metadata(&dir, cmd.name(), &hash, cfg.run.seed, &out.files)?;
    out.files.push(meta);
    Ok(RunReport {
        command: cmd,
        config_hash: hash,
        seed: cfg.run.seed,
        values: out.values,
        lines: out.lines,
        files: out.files,
        duration: start.elapsed(),
    })
}
