//! The encoder-decoder captioner: BiGRU audio encoder, GRU text encoder,
//! additive merge, GRU decoder with softmax output.

mod check;
mod config;
mod forward;
mod generate;
mod params;
mod train;

pub use check::{gradient_suite, GradReport, LAYER_TOLERANCE, MODEL_TOLERANCE};
pub use config::{ModelConfig, TrainConfig};
pub use forward::{
    backward_batch, decode, encode_audio, encode_text, forward_batch, loss_and_grad, merge,
    update_running_stats, BatchCache, Example,
};
pub use generate::{generate_caption, generate_ids};
pub use params::{load_checkpoint, save_checkpoint, vocab_path_for, ModelParams};
pub use train::{evaluate_loss, fit, train_step, write_training_log, EpochRecord, TrainReport};
