use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use glovenet_core::dataset::Vocabulary;
use glovenet_core::model::ModelConfig;
use glovenet_core::train::{ModelKind, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "glovenet",
    version,
    about = "Hand gesture recognition from finger-mounted IMUs"
)]
pub struct Cli {
    /// Worker threads for cross-validation folds and ablation cells.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset directory.
    Generate(GenerateArgs),
    /// Print a summary of a dataset directory.
    Inspect(InspectArgs),
    /// Fit a model on a trial-level train split and save it.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Eval(EvalArgs),
    /// Leave-one-trial-out cross-validation.
    Crossval(CrossvalArgs),
    /// Sensor-count and training-size sweep.
    Ablate(AblateArgs),
    /// One single-sensor model per finger, confusion matrices side by side.
    Attribute(AttributeArgs),
    /// Summarize a finished run directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabArg {
    Single,
    Multi,
}

impl From<VocabArg> for Vocabulary {
    fn from(v: VocabArg) -> Self {
        match v {
            VocabArg::Single => Vocabulary::Single,
            VocabArg::Multi => Vocabulary::Multi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Transformer,
    Tree,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Transformer => ModelKind::Transformer,
            ModelArg::Tree => ModelKind::Tree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub vocab: VocabArg,
    /// Number of samples.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Window length T in timesteps.
    #[arg(long = "len", default_value_t = 32)]
    pub len: usize,
    /// Falls back to GLOVENET_SEED, then 0.
    #[arg(long, env = "GLOVENET_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct InspectArgs {
    #[arg(long)]
    pub data: PathBuf,
}

/// Architecture and optimizer flags shared by every command that trains.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value = "transformer")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long = "batch", default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, env = "GLOVENET_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub d_model: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 64)]
    pub d_ff: usize,
    /// Maximum depth of the decision tree.
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,
}

impl FitArgs {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            learning_rate: self.lr,
            seed: self.seed,
            shuffle: true,
        }
    }

    /// Architecture template; T, S and C come from the data.
    pub fn model_template(&self) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            n_layers: self.layers,
            n_heads: self.heads,
            d_ff: self.d_ff,
            ..ModelConfig::new(1, 1, 2)
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Fraction of trials held out as the test split.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Comma-separated sensor counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub k: Vec<usize>,
    /// Comma-separated fractions of the training trials.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,1.0")]
    pub fractions: Vec<f64>,
    /// Number of seeds per cell, counting up from --seed.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AttributeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub run: PathBuf,
}
