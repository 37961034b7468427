use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD};
use rand::Rng;

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::nn::{
    glorot_uniform, prefixed, read_checkpoint, write_checkpoint, BatchNorm, Checkpoint, Dense,
    GruParams, Parameters, Tensor,
};
use crate::text::EmbeddingMatrix;

/// Every tensor of the model. A zeroed copy doubles as the gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// Per-feature standardisation applied to audio input (not trained).
    pub input_mean: Array1<f64>,
    pub input_std: Array1<f64>,
    pub bigru1_fwd: GruParams,
    pub bigru1_bwd: GruParams,
    pub bn_audio1: BatchNorm,
    pub bigru2_fwd: GruParams,
    pub bigru2_bwd: GruParams,
    pub bn_audio2: BatchNorm,
    pub embedding: Array2<f64>,
    pub text_gru: GruParams,
    pub bn_text: BatchNorm,
    pub decoder_gru: GruParams,
    pub bn_decoder: BatchNorm,
    pub output: Dense,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, unit batch-norm scale. The
    /// embedding table is Glorot-initialised too; see [`Self::with_embedding`].
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let (b1, b2) = (c.bigru1_cells, c.bigru2_cells);
        Ok(Self {
            input_mean: Array1::zeros(c.audio_dim),
            input_std: Array1::ones(c.audio_dim),
            bigru1_fwd: GruParams::new(rng, c.audio_dim, b1),
            bigru1_bwd: GruParams::new(rng, c.audio_dim, b1),
            bn_audio1: BatchNorm::new(2 * b1),
            bigru2_fwd: GruParams::new(rng, 2 * b1, b2),
            bigru2_bwd: GruParams::new(rng, 2 * b1, b2),
            bn_audio2: BatchNorm::new(2 * b2),
            embedding: glorot_uniform(rng, c.vocab_size, c.embed_dim),
            text_gru: GruParams::new(rng, c.embed_dim, c.text_gru_cells),
            bn_text: BatchNorm::new(c.text_gru_cells),
            decoder_gru: GruParams::new(rng, c.text_gru_cells, c.decoder_cells),
            bn_decoder: BatchNorm::new(c.decoder_cells),
            output: Dense::new(rng, c.decoder_cells, c.vocab_size),
            config,
        })
    }

    /// All weights zero, batch norm at identity scale.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let (b1, b2) = (c.bigru1_cells, c.bigru2_cells);
        Ok(Self {
            input_mean: Array1::zeros(c.audio_dim),
            input_std: Array1::ones(c.audio_dim),
            bigru1_fwd: GruParams::zeros(c.audio_dim, b1),
            bigru1_bwd: GruParams::zeros(c.audio_dim, b1),
            bn_audio1: BatchNorm::new(2 * b1),
            bigru2_fwd: GruParams::zeros(2 * b1, b2),
            bigru2_bwd: GruParams::zeros(2 * b1, b2),
            bn_audio2: BatchNorm::new(2 * b2),
            embedding: Array2::zeros((c.vocab_size, c.embed_dim)),
            text_gru: GruParams::zeros(c.embed_dim, c.text_gru_cells),
            bn_text: BatchNorm::new(c.text_gru_cells),
            decoder_gru: GruParams::zeros(c.text_gru_cells, c.decoder_cells),
            bn_decoder: BatchNorm::new(c.decoder_cells),
            output: Dense::zeros(c.decoder_cells, c.vocab_size),
            config,
        })
    }

    /// A gradient buffer: same shapes, every trainable value zero.
    pub fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        for (_, mut t) in g.named_mut() {
            t.fill(0.0);
        }
        g
    }

    /// Replace the embedding table with pretrained word vectors.
    pub fn with_embedding(mut self, vectors: &EmbeddingMatrix) -> Result<Self> {
        let v = &vectors.vectors;
        if v.dim() != self.embedding.dim() {
            return Err(Error::ShapeMismatch {
                name: "embedding".into(),
                expected: vec![self.embedding.nrows(), self.embedding.ncols()],
                found: vec![v.nrows(), v.ncols()],
            });
        }
        self.embedding.assign(v);
        Ok(self)
    }

    /// Set the input standardisation from training features (frames pooled).
    pub fn fit_input_stats(&mut self, features: &[ArrayView2<'_, f64>]) -> Result<()> {
        let d = self.config.audio_dim;
        let mut sum = Array1::<f64>::zeros(d);
        let mut sq = Array1::<f64>::zeros(d);
        let mut n = 0usize;
        for f in features {
            if f.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "features have {} columns, model expects {d}",
                    f.ncols()
                )));
            }
            for row in f.rows() {
                sum += &row;
                sq += &row.mapv(|x| x * x);
            }
            n += f.nrows();
        }
        if n == 0 {
            return Err(Error::EmptyFeature);
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - &mean * &mean;
        self.input_std = var.mapv(|v| v.max(0.0).sqrt().max(1e-6));
        self.input_mean = mean;
        Ok(())
    }

    fn batch_norms(&self) -> [(&'static str, &BatchNorm); 4] {
        [
            ("bn_audio1", &self.bn_audio1),
            ("bn_audio2", &self.bn_audio2),
            ("bn_text", &self.bn_text),
            ("bn_decoder", &self.bn_decoder),
        ]
    }

    /// Trainable tensors plus running statistics and input standardisation.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::default();
        for (name, t) in self.named() {
            ckpt.push(name, Tensor::from_view(&t));
        }
        for (layer, bn) in self.batch_norms() {
            for (name, t) in prefixed(layer, bn.buffers()) {
                ckpt.push(name, Tensor::from_view(&t));
            }
        }
        ckpt.push("input.mean", Tensor::from_view(&self.input_mean.view().into_dyn()));
        ckpt.push("input.std", Tensor::from_view(&self.input_std.view().into_dyn()));
        let c = &self.config;
        let hparams = Array1::from(vec![c.max_len as f64, c.dropout, c.alpha]);
        ckpt.push("hparams", Tensor::from_view(&hparams.view().into_dyn()));
        ckpt
    }

    /// Rebuild from a checkpoint; layer sizes are read off the tensor shapes.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let dims2 = |name: &str| -> Result<(usize, usize)> {
            match ckpt.get(name)?.dims[..] {
                [a, b] => Ok((a, b)),
                ref d => Err(Error::ShapeMismatch {
                    name: name.into(),
                    expected: vec![0, 0],
                    found: d.to_vec(),
                }),
            }
        };
        let (rows1, b1) = dims2("bigru1_fwd.w_z")?;
        let (_, b2) = dims2("bigru2_fwd.w_z")?;
        let (vocab_size, embed_dim) = dims2("embedding")?;
        let (_, text) = dims2("text_gru.w_z")?;
        let (_, dec) = dims2("decoder_gru.w_z")?;
        let hp = ckpt.expect("hparams", &[3])?;
        let config = ModelConfig {
            audio_dim: rows1.saturating_sub(b1),
            bigru1_cells: b1,
            bigru2_cells: b2,
            embed_dim,
            text_gru_cells: text,
            decoder_cells: dec,
            vocab_size,
            max_len: hp.data[0] as usize,
            dropout: shortest_f64(hp.data[1]),
            alpha: shortest_f64(hp.data[2]),
        };
        let mut params = Self::zeros(config)?;
        params.load_from(ckpt)?;
        Ok(params)
    }

    /// Overwrite every tensor from `ckpt`, which must match this model's shapes.
    pub fn load_from(&mut self, ckpt: &Checkpoint) -> Result<()> {
        fn fill(ckpt: &Checkpoint, name: &str, mut dst: ArrayViewMutD<'_, f64>) -> Result<()> {
            let t = ckpt.expect(name, dst.shape())?;
            for (d, &s) in dst.iter_mut().zip(&t.data) {
                *d = s as f64;
            }
            Ok(())
        }
        for (name, t) in self.named_mut() {
            fill(ckpt, &name, t)?;
        }
        for (layer, bn) in [
            ("bn_audio1", &mut self.bn_audio1),
            ("bn_audio2", &mut self.bn_audio2),
            ("bn_text", &mut self.bn_text),
            ("bn_decoder", &mut self.bn_decoder),
        ] {
            for (name, t) in prefixed(layer, bn.buffers_mut()) {
                fill(ckpt, &name, t)?;
            }
        }
        fill(ckpt, "input.mean", self.input_mean.view_mut().into_dyn())?;
        fill(ckpt, "input.std", self.input_std.view_mut().into_dyn())?;
        Ok(())
    }

    /// Bind a named tensor of a fresh model, for tests and tooling.
    pub fn tensor(&self, name: &str) -> Option<ArrayViewD<'_, f64>> {
        self.named().into_iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

impl Parameters for ModelParams {
    fn named(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = Vec::new();
        out.extend(prefixed("bigru1_fwd", self.bigru1_fwd.named()));
        out.extend(prefixed("bigru1_bwd", self.bigru1_bwd.named()));
        out.extend(prefixed("bn_audio1", self.bn_audio1.named()));
        out.extend(prefixed("bigru2_fwd", self.bigru2_fwd.named()));
        out.extend(prefixed("bigru2_bwd", self.bigru2_bwd.named()));
        out.extend(prefixed("bn_audio2", self.bn_audio2.named()));
        out.push(("embedding".into(), self.embedding.view().into_dyn()));
        out.extend(prefixed("text_gru", self.text_gru.named()));
        out.extend(prefixed("bn_text", self.bn_text.named()));
        out.extend(prefixed("decoder_gru", self.decoder_gru.named()));
        out.extend(prefixed("bn_decoder", self.bn_decoder.named()));
        out.extend(prefixed("output", self.output.named()));
        out
    }

    fn named_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut out = Vec::new();
        out.extend(prefixed("bigru1_fwd", self.bigru1_fwd.named_mut()));
        out.extend(prefixed("bigru1_bwd", self.bigru1_bwd.named_mut()));
        out.extend(prefixed("bn_audio1", self.bn_audio1.named_mut()));
        out.extend(prefixed("bigru2_fwd", self.bigru2_fwd.named_mut()));
        out.extend(prefixed("bigru2_bwd", self.bigru2_bwd.named_mut()));
        out.extend(prefixed("bn_audio2", self.bn_audio2.named_mut()));
        out.push(("embedding".into(), self.embedding.view_mut().into_dyn()));
        out.extend(prefixed("text_gru", self.text_gru.named_mut()));
        out.extend(prefixed("bn_text", self.bn_text.named_mut()));
        out.extend(prefixed("decoder_gru", self.decoder_gru.named_mut()));
        out.extend(prefixed("bn_decoder", self.bn_decoder.named_mut()));
        out.extend(prefixed("output", self.output.named_mut()));
        out
    }
}

/// Widen an f32 through its shortest decimal form, so 0.3f32 reads back as
/// 0.3 rather than 0.30000001192092896.
fn shortest_f64(x: f32) -> f64 {
    x.to_string().parse().unwrap_or(x as f64)
}

/// Vocabulary file stored next to a checkpoint.
pub fn vocab_path_for(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_owned();
    name.push(".vocab");
    PathBuf::from(name)
}

pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(path, &params.to_checkpoint())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    ModelParams::from_checkpoint(&read_checkpoint(path)?)
}
