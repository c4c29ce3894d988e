//! `latentflow` — batch pipeline driver for flow-battery manifold design:
//! corpus synthesis, latent-variable model training, embedding plots,
//! space-filling latent designs, multi-objective Bayesian optimization,
//! and Pareto-probability interpretation.
//!
//! Every command reads one flat INI config; all randomness is seeded from
//! it, so reruns are byte-identical. Exit codes: 0 success, 2 configuration
//! error (including refused hash mismatches), 3 missing upstream artifact,
//! 4 numeric failure.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{Ctx, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "latentflow",
    version,
    about = "Flow-battery manifold design pipeline over a learned latent space"
)]
struct Cli {
    /// Pipeline configuration file (flat INI).
    #[arg(long, global = true, default_value = "pipeline.ini")]
    config: PathBuf,
    /// Output directory; overrides [paths] out from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accept upstream artifacts whose config hash does not match.
    #[arg(long, global = true)]
    force: bool,
    /// Replace every seed in the config with N (applied before hashing).
    #[arg(long, global = true, value_name = "N")]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the mirrored-archetype raster corpus.
    Synth,
    /// Train the generator/discriminator/auxiliary triad on the corpus.
    Train,
    /// Embed the encoded corpus with t-SNE and plot it.
    Viz,
    /// Emit the space-filling latent design and its rendered design sheet.
    Doe,
    /// Run multi-objective Bayesian optimization over the latent ball.
    Optimize,
    /// Estimate Pareto probabilities and latent marginal distributions.
    Interpret,
    /// Re-render SVG plots from existing CSV artifacts.
    Plot,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", cli.config.display()))
    })?;
    let mut cfg = config::parse(&text).map_err(CliError::Config)?;
    if let Some(n) = cli.seed_override {
        cfg.override_seeds(n);
    }
    // --out moves the artifact tree but does not change the config identity.
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.out));
    let hash = cfg.hash();
    let ctx = Ctx {
        cfg,
        hash,
        out,
        force: cli.force,
    };
    match cli.command {
        Command::Synth => commands::synth(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Viz => commands::viz(&ctx),
        Command::Doe => commands::doe(&ctx),
        Command::Optimize => commands::optimize(&ctx),
        Command::Interpret => commands::interpret(&ctx),
        Command::Plot => commands::plot(&ctx),
    }
}
