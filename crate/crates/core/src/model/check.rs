use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{forward_batch, backward_batch, Example, ModelConfig, ModelParams};
use crate::error::Result;
use crate::nn::{
    bigru_backward_seq, bigru_forward_seq, cross_entropy_loss, embedding_backward, embedding_forward,
    gradient_check_floored, gru_backward_seq, gru_forward_seq, leaky_relu, leaky_relu_backward, resolution_floor,
    softmax_rows,
    BatchNorm, Dense, GruParams, Mode, Parameters, SeqBatch, LEAKY_ALPHA,
};
use crate::text::{EOS_ID, PAD_ID, SOS_ID};

const EPS: f64 = 1e-5;
pub const LAYER_TOLERANCE: f64 = 1e-5;
pub const MODEL_TOLERANCE: f64 = 1e-4;

/// Outcome of one finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub coordinates: usize,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

fn random<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
}

fn random_gru<R: Rng>(rng: &mut R, input: usize, hidden: usize) -> GruParams {
    let mut p = GruParams::new(rng, input, hidden);
    for b in [&mut p.b_z, &mut p.b_r, &mut p.b_h] {
        b.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
    }
    p
}

fn weighted_sum(a: &Array2<f64>, w: &Array2<f64>) -> f64 {
    (a * w).sum()
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn reshape(values: &[f64], like: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_vec(like.dim(), values.to_vec()).expect("matching length")
}

/// Central-difference check whose relative error ignores differences at the
/// rounding level of `f` (see [`resolution_floor`]).
fn check<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], analytic: &[f64], tolerance: f64) -> Result<f64> {
    let floor = resolution_floor(f(x), EPS, tolerance);
    gradient_check_floored(f, x, analytic, EPS, floor)
}

fn report(name: &'static str, err: f64, tolerance: f64, coordinates: usize) -> GradReport {
    GradReport {
        name,
        max_rel_error: err,
        tolerance,
        coordinates,
    }
}

/// GRU over a padded batch from a given `h0`; loss weights every emitted
/// state and the final state.
fn check_gru<R: Rng>(rng: &mut R, name: &'static str, lengths: Vec<usize>) -> Result<GradReport> {
    let (d, h) = (3, 4);
    let b = lengths.len();
    let steps = lengths.iter().copied().max().unwrap_or(1);
    let params = random_gru(rng, d, h);
    let input = SeqBatch::new(random(rng, steps * b, d), lengths);
    let h0 = random(rng, b, h);
    let w_states = random(rng, steps * b, h);
    let w_final = random(rng, b, h);

    let (_, _, cache) = gru_forward_seq(&params, &input, Some(h0.view()))?;
    let mut grads = GruParams::zeros(d, h);
    let (dx, dh0) = gru_backward_seq(&params, &cache, w_states.view(), Some(w_final.view()), &mut grads);
    let analytic = concat(&[&grads.flatten(), dx.as_slice().unwrap(), dh0.as_slice().unwrap()]);

    let np = params.num_params();
    let nx = input.data.len();
    let x0 = concat(&[&params.flatten(), input.data.as_slice().unwrap(), h0.as_slice().unwrap()]);
    let f = |x: &[f64]| {
        let mut p = params.clone();
        p.assign_flat(&x[..np]);
        let inp = input.with_data(reshape(&x[np..np + nx], &input.data));
        let h0 = reshape(&x[np + nx..], &h0);
        let (st, fin, _) = gru_forward_seq(&p, &inp, Some(h0.view())).expect("shapes fixed");
        weighted_sum(&st.data, &w_states) + weighted_sum(&fin, &w_final)
    };
    let err = check(f, &x0, &analytic, LAYER_TOLERANCE)?;
    Ok(report(name, err, LAYER_TOLERANCE, x0.len()))
}

fn check_bigru<R: Rng>(rng: &mut R) -> Result<GradReport> {
    let (d, h) = (3, 2);
    let fwd = random_gru(rng, d, h);
    let bwd = random_gru(rng, d, h);
    let input = SeqBatch::new(random(rng, 3 * 2, d), vec![3, 2]);
    let w = random(rng, 6, 2 * h);

    let (_, cache) = bigru_forward_seq(&fwd, &bwd, &input)?;
    let (mut gf, mut gb) = (GruParams::zeros(d, h), GruParams::zeros(d, h));
    let dx = bigru_backward_seq(&fwd, &bwd, &cache, w.view(), &mut gf, &mut gb);
    let analytic = concat(&[&gf.flatten(), &gb.flatten(), dx.as_slice().unwrap()]);

    let np = fwd.num_params();
    let x0 = concat(&[&fwd.flatten(), &bwd.flatten(), input.data.as_slice().unwrap()]);
    let f = |x: &[f64]| {
        let (mut pf, mut pb) = (fwd.clone(), bwd.clone());
        pf.assign_flat(&x[..np]);
        pb.assign_flat(&x[np..2 * np]);
        let inp = input.with_data(reshape(&x[2 * np..], &input.data));
        let (out, _) = bigru_forward_seq(&pf, &pb, &inp).expect("shapes fixed");
        weighted_sum(&out.data, &w)
    };
    let err = check(f, &x0, &analytic, LAYER_TOLERANCE)?;
    Ok(report("bigru", err, LAYER_TOLERANCE, x0.len()))
}

fn check_embedding<R: Rng>(rng: &mut R) -> Result<GradReport> {
    let table = random(rng, 5, 3);
    let ids = [0, 2, 2, 4];
    let w = random(rng, ids.len(), 3);
    let mut grad = Array2::zeros(table.dim());
    embedding_backward(&mut grad, &ids, w.view());
    let f = |x: &[f64]| weighted_sum(&embedding_forward(&reshape(x, &table), &ids).expect("ids valid"), &w);
    let err = check(f, table.as_slice().unwrap(), grad.as_slice().unwrap(), LAYER_TOLERANCE)?;
    Ok(report("embedding", err, LAYER_TOLERANCE, table.len()))
}

fn check_dense<R: Rng>(rng: &mut R) -> Result<GradReport> {
    let mut layer = Dense::new(rng, 4, 3);
    layer.bias.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    let x = random(rng, 5, 4);
    let w = random(rng, 5, 3);
    let mut grads = Dense::zeros(4, 3);
    let dx = layer.backward(x.view(), w.view(), &mut grads);
    let analytic = concat(&[&grads.flatten(), dx.as_slice().unwrap()]);
    let np = layer.num_params();
    let x0 = concat(&[&layer.flatten(), x.as_slice().unwrap()]);
    let f = |v: &[f64]| {
        let mut l = layer.clone();
        l.assign_flat(&v[..np]);
        weighted_sum(&l.forward(reshape(&v[np..], &x).view()).expect("shapes fixed"), &w)
    };
    let err = check(f, &x0, &analytic, LAYER_TOLERANCE)?;
    Ok(report("dense", err, LAYER_TOLERANCE, x0.len()))
}

fn check_batch_norm<R: Rng>(rng: &mut R) -> Result<GradReport> {
    let mut bn = BatchNorm::new(3);
    bn.gamma = Array1::from_shape_simple_fn(3, || rng.gen_range(0.5..1.5));
    bn.beta = Array1::from_shape_simple_fn(3, || rng.gen_range(-1.0..1.0));
    let x = random(rng, 6, 3);
    let mask = [true, true, false, true, true, true];
    let w = random(rng, 6, 3);
    let (_, cache) = bn.forward(x.view(), &mask, Mode::Train);
    let mut grads = BatchNorm::new(3);
    grads.gamma.fill(0.0);
    let dx = bn.backward(&cache, w.view(), &mut grads);
    let analytic = concat(&[&grads.flatten(), dx.as_slice().unwrap()]);
    let np = bn.num_params();
    let x0 = concat(&[&bn.flatten(), x.as_slice().unwrap()]);
    let f = |v: &[f64]| {
        let mut b = bn.clone();
        b.assign_flat(&v[..np]);
        let (y, _) = b.forward(reshape(&v[np..], &x).view(), &mask, Mode::Train);
        weighted_sum(&y, &w)
    };
    let err = check(f, &x0, &analytic, LAYER_TOLERANCE)?;
    Ok(report("batch_norm", err, LAYER_TOLERANCE, x0.len()))
}

fn check_leaky_relu<R: Rng>(rng: &mut R) -> Result<GradReport> {
    // keep clear of the kink at zero
    let x = Array2::from_shape_simple_fn((4, 3), || {
        let v: f64 = rng.gen_range(0.1..1.0);
        if rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    });
    let w = random(rng, 4, 3);
    let dx = leaky_relu_backward(&x, &w, LEAKY_ALPHA);
    let f = |v: &[f64]| weighted_sum(&reshape(v, &x).mapv(|e| leaky_relu(e, LEAKY_ALPHA)), &w);
    let err = check(f, x.as_slice().unwrap(), dx.as_slice().unwrap(), LAYER_TOLERANCE)?;
    Ok(report("leaky_relu", err, LAYER_TOLERANCE, x.len()))
}

fn check_softmax_ce<R: Rng>(rng: &mut R) -> Result<GradReport> {
    let logits = random(rng, 4, 5);
    let targets = [1, PAD_ID, 3, 4];
    let (_, grad) = cross_entropy_loss(softmax_rows(logits.view()).view(), &targets, PAD_ID)?;
    let f = |v: &[f64]| {
        let probs = softmax_rows(reshape(v, &logits).view());
        cross_entropy_loss(probs.view(), &targets, PAD_ID).expect("valid targets").0
    };
    let err = check(f, logits.as_slice().unwrap(), grad.as_slice().unwrap(), LAYER_TOLERANCE)?;
    Ok(report("softmax_cross_entropy", err, LAYER_TOLERANCE, logits.len()))
}

/// The whole encoder-decoder at a tiny size: V=10, audio_dim=8, T=4,
/// caption inputs of length 4 and 2, dropout active with a fixed mask.
fn check_model<R: Rng>(rng: &mut R) -> Result<GradReport> {
    let config = ModelConfig {
        audio_dim: 8,
        bigru1_cells: 3,
        bigru2_cells: 2,
        embed_dim: 5,
        text_gru_cells: 4,
        decoder_cells: 4,
        vocab_size: 10,
        max_len: 6,
        dropout: 0.5,
        alpha: LEAKY_ALPHA,
    };
    let mut params = ModelParams::new(config, rng)?;
    for (_, mut t) in params.named_mut() {
        t.mapv_inplace(|v| v + rng.gen_range(-0.1..0.1));
    }
    let feats = [random(rng, 4, 8), random(rng, 4, 8)];
    let caps = [
        vec![SOS_ID, 4, 5, 6, EOS_ID, PAD_ID],
        vec![SOS_ID, 7, EOS_ID, PAD_ID, PAD_ID, PAD_ID],
    ];
    let batch: Vec<Example<'_>> = feats
        .iter()
        .zip(&caps)
        .map(|(f, c)| Example {
            features: f.view(),
            caption: c,
        })
        .collect();
    let dropout_seed = rng.gen::<u64>();
    let loss_at = |p: &ModelParams| {
        let mut r = ChaCha8Rng::seed_from_u64(dropout_seed);
        forward_batch(p, &batch, Mode::Train, &mut r)
    };
    let (_, cache) = loss_at(&params)?;
    let analytic = backward_batch(&params, &cache).flatten();
    let x0 = params.flatten();
    let f = |x: &[f64]| {
        let mut p = params.clone();
        p.assign_flat(x);
        loss_at(&p).expect("shapes fixed").0
    };
    let err = check(f, &x0, &analytic, MODEL_TOLERANCE)?;
    Ok(report("encoder_decoder", err, MODEL_TOLERANCE, x0.len()))
}

/// Finite-difference checks of every layer and of the full model, in
/// double precision.
pub fn gradient_suite(seed: u64) -> Result<Vec<GradReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        check_gru(&mut rng, "gru_cell", vec![1, 1])?,
        check_gru(&mut rng, "gru_sequence", vec![4, 2, 3])?,
        check_bigru(&mut rng)?,
        check_embedding(&mut rng)?,
        check_dense(&mut rng)?,
        check_batch_norm(&mut rng)?,
        check_leaky_relu(&mut rng)?,
        check_softmax_ce(&mut rng)?,
        check_model(&mut rng)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for r in (0..12).flat_map(|s| gradient_suite(s).unwrap()) {
            println!("{:<24} {:.3e} ({} coords)", r.name, r.max_rel_error, r.coordinates);
            assert!(r.passed(), "{r:?}");
        }
    }
}
