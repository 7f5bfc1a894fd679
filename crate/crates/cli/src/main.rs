mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use neurokin_core::pose::TestKind;

use config::RunConfig;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn failed(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<neurokin_core::Error> for CliError {
    fn from(e: neurokin_core::Error) -> Self {
        Self::failed(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failed(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::internal(format!("json: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Logreg,
    Rf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Video,
    Subject,
}

fn parse_kind(s: &str) -> Result<TestKind, String> {
    s.parse().map_err(|e: neurokin_core::Error| e.to_string())
}

/// Kinematic features and abnormality analysis for pose recordings of
/// neurological exam tests.
#[derive(Debug, Parser)]
#[command(name = "neurokin", version)]
pub struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomised step (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Extra per-recording output format: json adds per-recording feature
    /// documents to `extract`; for `synth` it picks the recording format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract features from recordings (files or directories).
    Extract {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Cross-validate a classifier on a feature table.
    Classify {
        features: PathBuf,
        #[arg(long, value_enum, default_value = "rf")]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "video")]
        split: SplitArg,
    },
    /// Project a feature table onto its principal components.
    Pca {
        features: PathBuf,
        /// Number of components (defaults to `analysis.pca_components`).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Within- and between-class distances across the two devices.
    Distance { features: PathBuf },
    /// Generate synthetic recordings.
    Synth {
        /// Test to simulate (defaults to `synth.test_kind`, then FT).
        #[arg(long, value_parser = parse_kind)]
        test: Option<TestKind>,
        /// Generate a paired cohort instead of one recording.
        #[arg(long)]
        cohort: bool,
        /// Cohort size (defaults to `cohort.subjects`).
        #[arg(long, requires = "cohort")]
        subjects: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::failed(format!("cannot create {}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Extract { inputs } => commands::extract(&cfg, inputs, &cli.out, cli.format),
        Command::Classify { features, model, split } => commands::classify(&cfg, features, *model, *split, &cli.out),
        Command::Pca { features, k } => commands::pca(features, k.unwrap_or(cfg.analysis.pca_components), &cli.out),
        Command::Distance { features } => commands::distance(features, &cli.out),
        Command::Synth { test, cohort, subjects } => {
            commands::synth(&cfg, *test, *cohort, *subjects, &cli.out, cli.format)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
