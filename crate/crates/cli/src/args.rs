use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "capforge", version, about = "Audio captioning: features, embeddings, training, captioning, evaluation")]
pub struct Cli {
    /// Random seed for every stochastic step.
    #[arg(long, global = true, env = "CAPFORGE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn log_level(&self) -> &'static str {
        if self.quiet {
            "warn"
        } else {
            "info"
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract log-mel features from every WAV file in a directory.
    ExtractFeatures(ExtractArgs),
    /// Train Word2Vec embeddings on the captions of a caption CSV.
    TrainW2v(W2vArgs),
    /// Train the captioning model.
    Train(TrainArgs),
    /// Caption one feature file or a directory of them.
    Caption(CaptionArgs),
    /// Score candidate captions against references.
    Evaluate(EvaluateArgs),
    /// Run the finite-difference gradient checks.
    Gradcheck(GradcheckArgs),
    /// Write the synthetic toy dataset.
    ToyGen(ToyArgs),
}

#[derive(Debug, Args)]
pub struct FeatureFlags {
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
    /// Analysis window length in milliseconds.
    #[arg(long, default_value_t = 96.0)]
    pub window_ms: f64,
    /// Fraction of the window shared by consecutive frames.
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    #[arg(long, default_value_t = 64)]
    pub n_mels: usize,
    #[arg(long, default_value_t = 125.0)]
    pub f_min: f64,
    #[arg(long, default_value_t = 7500.0)]
    pub f_max: f64,
    /// Clips are zero-padded or trimmed to this many seconds.
    #[arg(long, default_value_t = 30.0)]
    pub duration: f64,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub audio_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub features: FeatureFlags,
}

#[derive(Debug, Args)]
pub struct W2vArgs {
    #[arg(long)]
    pub captions: PathBuf,
    /// Output FEAT file holding the V × dim embedding matrix.
    #[arg(long)]
    pub out_embeddings: PathBuf,
    #[arg(long)]
    pub out_vocab: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 15)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of `<audio id stem>.feat` files.
    #[arg(long)]
    pub features_dir: PathBuf,
    #[arg(long)]
    pub captions: PathBuf,
    /// Checkpoint to write; the vocabulary goes to `<out>.vocab`.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log CSV (default `<out>.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Records used for training; the rest validate. Default: all.
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Word2Vec embeddings from `train-w2v` (requires --vocab).
    #[arg(long, requires = "vocab")]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub audio_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub bigru1_cells: usize,
    #[arg(long, default_value_t = 64)]
    pub bigru2_cells: usize,
    #[arg(long, default_value_t = 256)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 128)]
    pub text_gru_cells: usize,
    #[arg(long, default_value_t = 128)]
    pub decoder_cells: usize,
    #[arg(long, default_value_t = 22)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    /// LeakyReLU slope for negative inputs.
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Clip gradients to this global norm.
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CaptionArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// A FEAT file or a directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the checkpoint's max_len.
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Lines of `id<TAB>caption`.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Lines of `id<TAB>ref1<TAB>...<TAB>ref5`.
    #[arg(long)]
    pub references: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub n_clips: usize,
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,
}
