use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use yod_core::readability::DEFAULT_YOD_TOLERANCE;
use yod_core::{Formula, Language};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "yodkit", version, about = "Turkish readability scoring, corpus splits and summary evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    Json,
    Csv,
    #[default]
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    None,
    FlipRegressor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Shuffled,
    Weighted,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Also write results into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score texts with readability formulas.
    Score {
        /// Text files; reads standard input when none (or `-`) is given.
        paths: Vec<PathBuf>,
        #[arg(long, default_value = "turkish")]
        lang: Language,
        /// Comma-separated formulas; defaults to those calibrated for --lang.
        #[arg(long, value_delimiter = ',')]
        formulas: Vec<Formula>,
        /// Extra abbreviations (one per line) that do not end a sentence.
        #[arg(long)]
        abbreviations: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Level histogram, sampling weights and summary lengths of a corpus.
    Analyze {
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Per-level test and validation splits plus a manifest.
    BuildSplits {
        corpus: PathBuf,
        /// Records per level in each of test and validation.
        #[arg(long, default_value_t = 20)]
        quota: usize,
        #[arg(long, env = "YODKIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a prediction run per level and per education group.
    Evaluate {
        predictions: PathBuf,
        #[arg(long, default_value_t = DEFAULT_YOD_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Train the toy model and write a checkpoint and a step log.
    TrainToy {
        /// Train on this corpus instead of the built-in sixteen examples.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, env = "YODKIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long, value_enum, default_value_t = SamplingArg::Shuffled)]
        sampling: SamplingArg,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Finite-difference check of the model gradient.
    Gradcheck {
        #[arg(long, env = "YODKIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        per_group: usize,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        /// Largest acceptable relative error.
        #[arg(long, default_value_t = 1e-4)]
        threshold: f64,
        /// Corrupt the analytic gradient to confirm the check catches it.
        #[arg(long, value_enum, default_value_t = Fault::None)]
        fault: Fault,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}
