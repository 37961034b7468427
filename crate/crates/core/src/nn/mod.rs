//! Hand-written layers with explicit forward and backward passes.

mod activation;
mod adam;
mod batchnorm;
mod checkpoint;
mod dense;
mod dropout;
mod gradcheck;
mod gru;

pub use activation::{
    cross_entropy_loss, leaky_relu, leaky_relu_backward, sigmoid, softmax, softmax_rows,
    LEAKY_ALPHA,
};
pub use adam::{Adam, AdamConfig};
pub use batchnorm::{BatchNorm, BatchNormCache};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, Tensor};
pub use dense::{embedding_backward, embedding_forward, Dense};
pub use dropout::dropout_forward;
pub use gradcheck::{
    central_difference, gradient_check, gradient_check_floored, relative_error, relative_error_floored, resolution_floor,
    RELATIVE_FLOOR,
};
pub use gru::{
    bigru_backward_seq, bigru_forward, bigru_forward_seq, gru_backward_seq, gru_cell_forward,
    gru_forward, gru_forward_seq, BiGruCache, GruCache, GruParams, SeqBatch,
};

use ndarray::{ArrayViewD, ArrayViewMutD};
use rand::Rng;

/// Whether dropout and batch statistics are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// A set of named trainable tensors. Gradients are stored in a value of the
/// same type, so parameters and gradients enumerate in the same order.
pub trait Parameters {
    fn named(&self) -> Vec<(String, ArrayViewD<'_, f64>)>;
    fn named_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)>;

    fn num_params(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    /// Flattened copy of every trainable value, in enumeration order.
    fn flatten(&self) -> Vec<f64> {
        self.named()
            .into_iter()
            .flat_map(|(_, t)| t.iter().copied().collect::<Vec<_>>())
            .collect()
    }

    fn assign_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for (_, mut t) in self.named_mut() {
            for x in t.iter_mut() {
                *x = *it.next().expect("flat vector too short");
            }
        }
        assert!(it.next().is_none(), "flat vector too long");
    }

    fn global_norm(&self) -> f64 {
        self.named()
            .iter()
            .flat_map(|(_, t)| t.iter().map(|x| x * x).collect::<Vec<_>>())
            .sum::<f64>()
            .sqrt()
    }

    fn scale(&mut self, k: f64) {
        for (_, mut t) in self.named_mut() {
            t.mapv_inplace(|x| x * k);
        }
    }

    fn all_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }
}

pub(crate) fn prefixed<T>(prefix: &str, items: Vec<(String, T)>) -> Vec<(String, T)> {
    items
        .into_iter()
        .map(|(n, t)| (format!("{prefix}.{n}"), t))
        .collect()
}

/// Glorot-uniform sample for a `fan_in × fan_out` weight.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> ndarray::Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    ndarray::Array2::from_shape_simple_fn((fan_in, fan_out), || rng.gen_range(-limit..=limit))
}
