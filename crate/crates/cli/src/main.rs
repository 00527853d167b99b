mod config;
mod stages;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "axtnn", version, about = "Approximate bespoke ternary neural network circuits")]
struct Cli {
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Recompute stages whose outputs already exist.
    #[arg(long, global = true)]
    force: bool,
    /// Technology cell-area file.
    #[arg(long, global = true)]
    tech: Option<PathBuf>,
    /// Interface cost overrides (CSV: kind,bits,area_mm2,power_mw).
    #[arg(long, global = true)]
    interface_table: Option<PathBuf>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Label column of the dataset.
    #[arg(long, global = true)]
    label: Option<String>,
    /// Input precisions, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    ks: Option<Vec<u32>>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one ternary network per input precision.
    Train,
    /// Assemble exact classifier netlists and report their cost.
    GenExact,
    /// Evolve approximate LTG and popcount components for the trained models.
    BuildLibrary,
    /// Search accuracy/area fronts and the interface-aware system front.
    Optimize,
    /// Monte Carlo accuracy under converter reference variation.
    Variation {
        /// Also analyze this front design (e.g. k2-3).
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Summary table of exact and front designs.
    Report,
    /// Every stage in order.
    Run,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = &cli.tech {
        cfg.tech = Some(p.clone());
    }
    if let Some(p) = &cli.interface_table {
        cfg.interface_table = Some(p.clone());
    }
    if let Some(p) = &cli.out {
        cfg.out = p.clone();
    }
    if let Some(p) = &cli.dataset {
        cfg.dataset = p.clone();
    }
    if let Some(l) = &cli.label {
        cfg.label = l.clone();
    }
    if let Some(ks) = &cli.ks {
        cfg.ks = ks.clone();
    }
    if let Command::Variation { sigma, trials, .. } = &cli.cmd {
        if let Some(s) = sigma {
            cfg.variation.sigma = *s;
        }
        if let Some(t) = trials {
            cfg.variation.trials = *t;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("configuring worker pool")?;
    }
    let cfg = resolve(&cli)?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let resolved = serde_json::to_string_pretty(&cfg)? + "\n";
    axtnn::complib::write_atomic(&cfg.out.join("run_config.json"), resolved.as_bytes())?;
    let force = cli.force;
    match &cli.cmd {
        Command::Train => stages::train(&cfg, force),
        Command::GenExact => stages::gen_exact(&cfg, force),
        Command::BuildLibrary => stages::build_library(&cfg, force),
        Command::Optimize => stages::optimize(&cfg, force),
        Command::Variation { point, .. } => stages::variation(&cfg, point.as_deref(), force),
        Command::Report => stages::report(&cfg).map(|_| ()),
        Command::Run => {
            stages::train(&cfg, force)?;
            stages::gen_exact(&cfg, force)?;
            stages::build_library(&cfg, force)?;
            stages::optimize(&cfg, force)?;
            stages::variation(&cfg, None, force)?;
            stages::report(&cfg).map(|_| ())
        }
    }
}
