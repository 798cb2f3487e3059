use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use superres_cli::{run, CliError, Command, ExperimentConfig, FigureKind, RunOptions};

/// Two-source discrimination and super-resolution experiments.
#[derive(Parser)]
#[command(name = "superres", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the run seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report entropies in bits
    #[arg(long, global = true)]
    bits: bool,
    /// Reduced profile: 5 trials x 5000 photons
    #[arg(long, global = true)]
    smoke: bool,
    /// Worker threads for Monte Carlo trials
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Field samples for thermal-check
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Quantum, interferometric and direct-imaging relative entropies
    Entropy,
    /// Calibrated likelihood-ratio test with error rates and Stein predictions
    Discriminate,
    /// Separation estimation trials scored against the Cramer-Rao bound
    Estimate,
    /// g2(0) of simulated thermal and coherent light
    ThermalCheck,
    /// Write figure data as CSV
    Figure {
        #[arg(long, value_enum, default_value = "all")]
        kind: Kind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    All,
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or(superres_cli::ConfigError::Missing("--config"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if common.smoke {
        cfg = cfg.smoke();
    }
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.run.output_dir = o.clone();
    }
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(superres_cli::ConfigError::Invalid {
                key: "--workers",
                reason: "must be >= 1".into(),
            }
            .into());
        }
        cfg.run.workers = Some(w);
    }
    if let Some(m) = common.samples {
        cfg.run.thermal_samples = m;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Sub::Entropy => Command::Entropy,
        Sub::Discriminate => Command::Discriminate,
        Sub::Estimate => Command::Estimate,
        Sub::ThermalCheck => Command::ThermalCheck,
        Sub::Figure { kind } => Command::Figure(match kind {
            Kind::Fig4 => FigureKind::Fig4,
            Kind::Fig5 => FigureKind::Fig5,
            Kind::Fig6 => FigureKind::Fig6,
            Kind::Fig7 => FigureKind::Fig7,
            Kind::All => FigureKind::All,
        }),
    };
    let result = load(&cli.common).and_then(|cfg| run(cmd, &cfg, RunOptions { bits: cli.common.bits }));
    match result {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
