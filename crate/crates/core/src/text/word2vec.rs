//! Skip-gram Word2Vec with negative sampling.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Vocabulary;
use crate::audio::{read_feat, write_feat};
use crate::error::{Error, Result};

pub const WORD_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct W2VConfig {
    pub dim: usize,
    /// Maximum context radius; each centre word draws its radius from 1..=window.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to zero over training.
    pub lr: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for W2VConfig {
    fn default() -> Self {
        Self {
            dim: WORD_DIM,
            window: 5,
            negatives: 5,
            epochs: 15,
            lr: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

impl W2VConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.min_count == 0 {
            return Err(Error::InvalidConfig(
                "word2vec dim, window, negatives and min_count must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig("word2vec lr must be positive".into()));
        }
        Ok(())
    }
}

/// Input-side word vectors, one row per vocabulary id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub vectors: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn vocab_size(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, id: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(id)
    }
}

pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let denom = a.dot(&a).sqrt() * b.dot(&b).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(&b) / denom
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn train_word2vec<S: AsRef<str>>(
    corpus: &[Vec<S>],
    vocab: &Vocabulary,
    config: &W2VConfig,
) -> Result<EmbeddingMatrix> {
    config.validate()?;
    let dim = config.dim;
    let v = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Uniform::new(-0.5 / dim as f64, 0.5 / dim as f64);
    let mut input = Array2::from_shape_simple_fn((v, dim), || init.sample(&mut rng));
    let mut output = Array2::<f64>::zeros((v, dim));

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().map(|t| vocab.id_or_unk(t.as_ref())).collect())
        .collect();
    let mut counts = vec![0usize; v];
    for &id in sentences.iter().flatten() {
        counts[id] += 1;
    }
    let total_tokens: usize = counts.iter().sum();
    if total_tokens == 0 {
        return Ok(EmbeddingMatrix { vectors: input });
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let noise = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidConfig(format!("negative sampling table: {e}")))?;

    let total_steps = (config.epochs * total_tokens).max(1) as f64;
    let mut processed = 0usize;
    let mut grad_in = vec![0.0f64; dim];

    for _ in 0..config.epochs {
        for sentence in &sentences {
            for (i, &center) in sentence.iter().enumerate() {
                let lr = config.lr * (1.0 - processed as f64 / total_steps).max(1e-4);
                processed += 1;
                let radius = rng.gen_range(1..=config.window);
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(sentence.len() - 1);
                for (j, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad_in.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=config.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let vin = input.row(center);
                        let mut vout = output.row_mut(target);
                        let score = sigmoid(vin.dot(&vout));
                        let g = (label - score) * lr;
                        for ((gi, o), x) in grad_in.iter_mut().zip(vout.iter_mut()).zip(vin.iter()) {
                            *gi += g * *o;
                            *o += g * x;
                        }
                    }
                    for (x, g) in input.row_mut(center).iter_mut().zip(&grad_in) {
                        *x += g;
                    }
                }
            }
        }
    }
    if input.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteGradient("word2vec vectors".into()));
    }
    Ok(EmbeddingMatrix { vectors: input })
}

pub fn save_embedding_matrix(path: impl AsRef<Path>, matrix: &EmbeddingMatrix) -> Result<()> {
    let data: Vec<f32> = matrix.vectors.iter().map(|&x| x as f32).collect();
    write_feat(path.as_ref(), matrix.vocab_size(), matrix.dim(), &data)
}

pub fn load_embedding_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let (rows, cols, data) = read_feat(path.as_ref())?;
    let vectors = Array2::from_shape_vec((rows, cols), data.into_iter().map(f64::from).collect())
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    Ok(EmbeddingMatrix { vectors })
}
