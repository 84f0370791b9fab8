mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::Sink;

#[derive(Parser)]
#[command(name = "rmtopo", version, about = "Randomized-measurement topological invariants of spin chains")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenpair of the configured chain.
    GroundState,
    /// Invariant of the ground state on the configured partition.
    Invariants {
        #[arg(long, conflicts_with = "sampled")]
        exact: bool,
        #[arg(long)]
        sampled: bool,
    },
    /// Cartesian parameter sweep.
    Sweep,
    /// Néel-to-ground-state ramp with invariant monitoring.
    Adiabatic,
    /// Mean absolute estimator error against one protocol parameter.
    ErrorScan,
    /// Monte Carlo check of the twirling identities.
    TwirlCheck {
        #[arg(default_value_t = 100_000)]
        n_samples: usize,
    },
    /// Simulate a campaign on the ground state and store its records.
    CampaignExport,
    /// Estimate invariants from stored records.
    CampaignAnalyze {
        #[arg(long)]
        records: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            anyhow::bail!("--jobs must be ≥ 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if matches!(cli.command, Command::TwirlCheck { .. }) => toml::from_str("")?,
        None => anyhow::bail!("--config is required for this command"),
    };
    if cli.seed.is_some() {
        cfg.master_seed = cli.seed;
    }
    if matches!(cli.command, Command::TwirlCheck { .. }) && cfg.master_seed.is_none() {
        cfg.master_seed = Some(0);
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir());
    let default_prefix = match &cli.command {
        Command::GroundState => "ground_state",
        Command::Invariants { sampled: true, .. } => "invariants_sampled",
        Command::Invariants { .. } => "invariants_exact",
        Command::Sweep => "sweep",
        Command::Adiabatic => "adiabatic",
        Command::ErrorScan => "error_scan",
        Command::TwirlCheck { .. } => "twirl_check",
        Command::CampaignExport => "campaign",
        Command::CampaignAnalyze { .. } => "campaign_analysis",
    };
    let sink = Sink::new(&dir, cfg.prefix(default_prefix))?;
    match cli.command {
        Command::GroundState => commands::ground_state_cmd(&cfg, &sink),
        Command::Invariants { sampled, .. } => commands::invariants_cmd(&cfg, &sink, sampled),
        Command::Sweep => commands::sweep_cmd(&cfg, &sink),
        Command::Adiabatic => commands::adiabatic_cmd(&cfg, &sink),
        Command::ErrorScan => commands::error_scan_cmd(&cfg, &sink),
        Command::TwirlCheck { n_samples } => commands::twirl_cmd(&cfg, &sink, n_samples),
        Command::CampaignExport => commands::campaign_export_cmd(&cfg, &sink),
        Command::CampaignAnalyze { records } => commands::campaign_analyze_cmd(&cfg, &sink, &records),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
