use crate::error::{Error, Result};
use crate::nn::{AdamConfig, LEAKY_ALPHA};
use crate::text::{MAX_CAPTION_LEN, WORD_DIM};

/// Layer sizes and regularisation of the encoder-decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub audio_dim: usize,
    pub bigru1_cells: usize,
    pub bigru2_cells: usize,
    pub embed_dim: usize,
    pub text_gru_cells: usize,
    pub decoder_cells: usize,
    pub vocab_size: usize,
    pub max_len: usize,
    pub dropout: f64,
    pub alpha: f64,
}

impl ModelConfig {
    pub fn new(audio_dim: usize, vocab_size: usize) -> Self {
        Self {
            audio_dim,
            bigru1_cells: 32,
            bigru2_cells: 64,
            embed_dim: WORD_DIM,
            text_gru_cells: 128,
            decoder_cells: 128,
            vocab_size,
            max_len: MAX_CAPTION_LEN,
            dropout: 0.5,
            alpha: LEAKY_ALPHA,
        }
    }

    /// Width of the audio code and of the merged sequence.
    pub fn code_dim(&self) -> usize {
        2 * self.bigru2_cells
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.code_dim() != self.text_gru_cells {
            return bad(format!(
                "merge needs 2·bigru2_cells = text_gru_cells, got 2·{} vs {}",
                self.bigru2_cells, self.text_gru_cells
            ));
        }
        let sizes = [
            ("audio_dim", self.audio_dim),
            ("bigru1_cells", self.bigru1_cells),
            ("bigru2_cells", self.bigru2_cells),
            ("embed_dim", self.embed_dim),
            ("text_gru_cells", self.text_gru_cells),
            ("decoder_cells", self.decoder_cells),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if self.vocab_size <= crate::text::UNK_ID + 1 {
            return bad(format!("vocab_size {} leaves no content tokens", self.vocab_size));
        }
        if self.max_len < 3 {
            return bad(format!("max_len {} leaves no room for content", self.max_len));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} not in (0, 1)", self.alpha));
        }
        Ok(())
    }
}

/// Optimisation settings. Teacher forcing is always on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Rescale gradients whose global norm exceeds this.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 50,
            seed: 0,
            adam: AdamConfig::default(),
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::InvalidConfig(format!("learning rate {} must be positive", self.adam.lr)));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::InvalidConfig("clip_norm must be positive".into()));
        }
        Ok(())
    }
}
