//! Config-driven experiment runner: train, sample, evaluate, build synthetic
//! landscapes and verify run manifests.
//!
//! Every command validates its inputs before touching the output directory and
//! writes its files atomically, followed by a `manifest.json` with content digests.

pub mod commands;
pub mod config;
mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::ExperimentConfig;
pub use error::CliError;
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "seqlab", version, about = "RL fine-tuning laboratory for discrete sequence design")]
pub struct Cli {
    /// Worker threads for training, sampling and evaluation (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fine-tune the configured policy and write a checkpoint plus a training report.
    Train(RunArgs),
    /// Draw samples per context from a checkpoint (or the initial policy).
    Sample(SampleArgs),
    /// Compare a base and a tuned sample log.
    Evaluate(EvaluateArgs),
    /// Write a synthetic `variant,fitness` table.
    MakeLandscape(LandscapeArgs),
    /// Check every file listed in a run manifest against its digest.
    VerifyManifest(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Policy checkpoint; the config's initial policy when omitted.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Model tag written into the log (`tuned` with a checkpoint, else `base`).
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub tuned: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LandscapeKind {
    Nk,
    #[value(alias = "phoq_like")]
    PhoqLike,
}

#[derive(Debug, Clone, Args)]
pub struct LandscapeArgs {
    #[arg(long, value_enum)]
    pub kind: LandscapeKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// NK: number of sites.
    #[arg(long)]
    pub n: Option<usize>,
    /// NK: interaction order.
    #[arg(long)]
    pub k: Option<usize>,
    /// NK: alphabet size (a prefix of the canonical amino acids).
    #[arg(long, default_value_t = 20)]
    pub alphabet_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub high_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub labeled_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Run directory or manifest file.
    pub path: PathBuf,
}

/// Runs one command and returns a one-line summary.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Validation("--workers must be >= 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Train(a) => commands::train(a).map(|d| format!("trained; outputs in {}", d.display())),
        Command::Sample(a) => commands::sample(a).map(|d| format!("sampled; outputs in {}", d.display())),
        Command::Evaluate(a) => commands::evaluate(a).map(|d| format!("evaluated; outputs in {}", d.display())),
        Command::MakeLandscape(a) => {
            commands::make_landscape(a).map(|d| format!("landscape written to {}", d.display()))
        }
        Command::VerifyManifest(a) => commands::verify_manifest(a).map(|n| format!("{n} files verified")),
    })
}
