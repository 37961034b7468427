//! Gated recurrent units.
//!
//! Each gate weight is `(hidden + input) × hidden` and multiplies the row
//! vector `[h_{t-1}, x_t]`, so rows `..hidden` hold the recurrent block and
//! rows `hidden..` the input block:
//!
//! ```text
//! z   = σ([h, x]·W_z + b_z)
//! r   = σ([h, x]·W_r + b_r)
//! ĥ   = tanh([r⊙h, x]·W_h + b_h)
//! h'  = (1 - z)⊙h + z⊙ĥ
//! ```
//!
//! Batched sequences are stored time-major in one matrix: row `t·B + b`
//! holds step `t` of sample `b`. Past a sample's length the state is
//! carried unchanged and the input is ignored.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewD, ArrayViewMutD, Axis, Zip};
use rand::Rng;

use super::activation::sigmoid;
use super::{glorot_uniform, Parameters};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_z: Array2<f64>,
    pub w_r: Array2<f64>,
    pub w_h: Array2<f64>,
    pub b_z: Array1<f64>,
    pub b_r: Array1<f64>,
    pub b_h: Array1<f64>,
}

impl GruParams {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, input: usize, hidden: usize) -> Self {
        Self {
            w_z: glorot_uniform(rng, hidden + input, hidden),
            w_r: glorot_uniform(rng, hidden + input, hidden),
            w_h: glorot_uniform(rng, hidden + input, hidden),
            b_z: Array1::zeros(hidden),
            b_r: Array1::zeros(hidden),
            b_h: Array1::zeros(hidden),
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_z: Array2::zeros((hidden + input, hidden)),
            w_r: Array2::zeros((hidden + input, hidden)),
            w_h: Array2::zeros((hidden + input, hidden)),
            b_z: Array1::zeros(hidden),
            b_r: Array1::zeros(hidden),
            b_h: Array1::zeros(hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_z.ncols()
    }

    pub fn input(&self) -> usize {
        self.w_z.nrows() - self.hidden()
    }

    fn recurrent(w: &Array2<f64>) -> ArrayView2<'_, f64> {
        w.slice(s![..w.ncols(), ..])
    }

    fn input_block(w: &Array2<f64>) -> ArrayView2<'_, f64> {
        w.slice(s![w.ncols().., ..])
    }

    fn check(&self, input: usize, hidden: Option<usize>) -> Result<()> {
        let h = self.hidden();
        let shapes_ok = [&self.w_r, &self.w_h].iter().all(|w| w.dim() == self.w_z.dim())
            && [&self.b_z, &self.b_r, &self.b_h].iter().all(|b| b.len() == h);
        if !shapes_ok {
            return Err(Error::DimensionMismatch("inconsistent GRU parameter shapes".into()));
        }
        if input != self.input() {
            return Err(Error::DimensionMismatch(format!(
                "GRU expects {}-d input, got {input}",
                self.input()
            )));
        }
        if let Some(got) = hidden.filter(|&got| got != h) {
            return Err(Error::DimensionMismatch(format!(
                "GRU has {h} units, initial state has {got}"
            )));
        }
        Ok(())
    }
}

impl Parameters for GruParams {
    fn named(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        vec![
            ("w_z".into(), self.w_z.view().into_dyn()),
            ("w_r".into(), self.w_r.view().into_dyn()),
            ("w_h".into(), self.w_h.view().into_dyn()),
            ("b_z".into(), self.b_z.view().into_dyn()),
            ("b_r".into(), self.b_r.view().into_dyn()),
            ("b_h".into(), self.b_h.view().into_dyn()),
        ]
    }

    fn named_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        vec![
            ("w_z".into(), self.w_z.view_mut().into_dyn()),
            ("w_r".into(), self.w_r.view_mut().into_dyn()),
            ("w_h".into(), self.w_h.view_mut().into_dyn()),
            ("b_z".into(), self.b_z.view_mut().into_dyn()),
            ("b_r".into(), self.b_r.view_mut().into_dyn()),
            ("b_h".into(), self.b_h.view_mut().into_dyn()),
        ]
    }
}

/// One GRU step for a single sample.
pub fn gru_cell_forward(
    x: ArrayView1<'_, f64>,
    h_prev: ArrayView1<'_, f64>,
    params: &GruParams,
) -> Result<Array1<f64>> {
    params.check(x.len(), Some(h_prev.len()))?;
    let x = x.insert_axis(Axis(0));
    let h = h_prev.insert_axis(Axis(0));
    let StepOut(next, ..) = step(params, h, &params.project_inputs(x));
    Ok(next.index_axis_move(Axis(0), 0))
}

struct StepOut(Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>);

impl GruParams {
    /// `x·W_x + b` for the three gates, stacked `[z | r | h]` along columns.
    fn project_inputs(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let h = self.hidden();
        let mut out = Array2::zeros((x.nrows(), 3 * h));
        for (k, (w, b)) in [(&self.w_z, &self.b_z), (&self.w_r, &self.b_r), (&self.w_h, &self.b_h)]
            .into_iter()
            .enumerate()
        {
            let mut block = out.slice_mut(s![.., k * h..(k + 1) * h]);
            block.assign(&b.view().insert_axis(Axis(0)));
            general_mat_mul(1.0, &x, &Self::input_block(w), 1.0, &mut block);
        }
        out
    }
}

/// One batched step given the projected inputs; yields (h_new, z, r, candidate).
fn step(params: &GruParams, h: ArrayView2<'_, f64>, projected: &Array2<f64>) -> StepOut {
    let n = params.hidden();
    let mut z = projected.slice(s![.., ..n]).to_owned();
    general_mat_mul(1.0, &h, &GruParams::recurrent(&params.w_z), 1.0, &mut z);
    z.mapv_inplace(sigmoid);
    let mut r = projected.slice(s![.., n..2 * n]).to_owned();
    general_mat_mul(1.0, &h, &GruParams::recurrent(&params.w_r), 1.0, &mut r);
    r.mapv_inplace(sigmoid);
    let rh = &r * &h;
    let mut c = projected.slice(s![.., 2 * n..]).to_owned();
    general_mat_mul(1.0, &rh, &GruParams::recurrent(&params.w_h), 1.0, &mut c);
    c.mapv_inplace(f64::tanh);
    let mut next = h.to_owned();
    Zip::from(&mut next).and(&z).and(&c).for_each(|hn, &z, &c| *hn += z * (c - *hn));
    StepOut(next, z, r, c)
}

/// A batch of variable-length sequences in time-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch {
    /// `(steps · batch) × features`, row `t·batch + b`.
    pub data: Array2<f64>,
    pub batch: usize,
    pub lengths: Vec<usize>,
}

impl SeqBatch {
    pub fn new(data: Array2<f64>, lengths: Vec<usize>) -> Self {
        let batch = lengths.len();
        assert!(batch > 0 && data.nrows().is_multiple_of(batch));
        assert!(lengths.iter().all(|&l| l <= data.nrows() / batch));
        Self { data, batch, lengths }
    }

    /// Pack per-sample `T_b × D` matrices, zero-padding to the longest.
    pub fn from_sequences(seqs: &[ArrayView2<'_, f64>]) -> Self {
        let batch = seqs.len();
        let steps = seqs.iter().map(|s| s.nrows()).max().unwrap_or(0);
        let dim = seqs.first().map_or(0, |s| s.ncols());
        let mut data = Array2::zeros((steps * batch, dim));
        for (b, seq) in seqs.iter().enumerate() {
            for (t, row) in seq.rows().into_iter().enumerate() {
                data.row_mut(t * batch + b).assign(&row);
            }
        }
        Self::new(data, seqs.iter().map(|s| s.nrows()).collect())
    }

    pub fn steps(&self) -> usize {
        self.data.nrows() / self.batch
    }

    pub fn features(&self) -> usize {
        self.data.ncols()
    }

    pub fn step(&self, t: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![t * self.batch..(t + 1) * self.batch, ..])
    }

    pub fn row_index(&self, t: usize, b: usize) -> usize {
        t * self.batch + b
    }

    pub fn mask(&self) -> Vec<bool> {
        (0..self.data.nrows())
            .map(|i| i / self.batch < self.lengths[i % self.batch])
            .collect()
    }

    pub fn valid_count(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Same layout, new payload.
    pub fn with_data(&self, data: Array2<f64>) -> Self {
        assert_eq!(data.nrows(), self.data.nrows());
        Self {
            data,
            batch: self.batch,
            lengths: self.lengths.clone(),
        }
    }

    /// Sample `b` as a `T_b × D` matrix.
    pub fn sample(&self, b: usize) -> Array2<f64> {
        let mut out = Array2::zeros((self.lengths[b], self.features()));
        for t in 0..self.lengths[b] {
            out.row_mut(t).assign(&self.data.row(self.row_index(t, b)));
        }
        out
    }

    /// Reverse every sample within its own length; padding stays zero.
    pub fn reversed(&self) -> Self {
        self.with_data(reverse_rows(&self.data, self.batch, &self.lengths))
    }
}

fn reverse_rows(data: &Array2<f64>, batch: usize, lengths: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(data.dim());
    for (b, &len) in lengths.iter().enumerate() {
        for t in 0..len {
            out.row_mut(t * batch + b).assign(&data.row((len - 1 - t) * batch + b));
        }
    }
    out
}

/// Activations saved by [`gru_forward_seq`] for the backward pass.
#[derive(Debug, Clone)]
pub struct GruCache {
    input: Array2<f64>,
    h_prev: Array2<f64>,
    z: Array2<f64>,
    r: Array2<f64>,
    c: Array2<f64>,
    batch: usize,
    lengths: Vec<usize>,
}

/// Run a GRU over a batch. Returns every state (carried past each
/// sample's end), the final states `B × H`, and the cache.
pub fn gru_forward_seq(
    params: &GruParams,
    input: &SeqBatch,
    h0: Option<ArrayView2<'_, f64>>,
) -> Result<(SeqBatch, Array2<f64>, GruCache)> {
    params.check(input.features(), h0.map(|h| h.ncols()))?;
    let (batch, steps, n) = (input.batch, input.steps(), params.hidden());
    let projected = params.project_inputs(input.data.view());
    let mut h = match h0 {
        Some(h0) => h0.to_owned(),
        None => Array2::zeros((batch, n)),
    };
    let rows = steps * batch;
    let mut states = Array2::zeros((rows, n));
    let mut cache = GruCache {
        input: input.data.clone(),
        h_prev: Array2::zeros((rows, n)),
        z: Array2::zeros((rows, n)),
        r: Array2::zeros((rows, n)),
        c: Array2::zeros((rows, n)),
        batch,
        lengths: input.lengths.clone(),
    };
    for t in 0..steps {
        let block = s![t * batch..(t + 1) * batch, ..];
        let proj = projected.slice(block).to_owned();
        let StepOut(next, z, r, c) = step(params, h.view(), &proj);
        cache.h_prev.slice_mut(block).assign(&h);
        cache.z.slice_mut(block).assign(&z);
        cache.r.slice_mut(block).assign(&r);
        cache.c.slice_mut(block).assign(&c);
        for b in 0..batch {
            if t < input.lengths[b] {
                h.row_mut(b).assign(&next.row(b));
            }
        }
        states.slice_mut(block).assign(&h);
    }
    Ok((input.with_data(states), h, cache))
}

/// Backward through [`gru_forward_seq`].
///
/// `d_states` is the gradient on every emitted state, `d_final` an optional
/// extra gradient on the final states. Accumulates into `grads` and returns
/// the gradient on the inputs and on `h0`.
pub fn gru_backward_seq(
    params: &GruParams,
    cache: &GruCache,
    d_states: ArrayView2<'_, f64>,
    d_final: Option<ArrayView2<'_, f64>>,
    grads: &mut GruParams,
) -> (Array2<f64>, Array2<f64>) {
    let (batch, n) = (cache.batch, params.hidden());
    let rows = cache.input.nrows();
    let steps = rows / batch;
    let mut dh_next = match d_final {
        Some(d) => d.to_owned(),
        None => Array2::zeros((batch, n)),
    };
    let mut da = Array2::zeros((rows, 3 * n));
    let u_z = GruParams::recurrent(&params.w_z);
    let u_r = GruParams::recurrent(&params.w_r);
    let u_h = GruParams::recurrent(&params.w_h);

    for t in (0..steps).rev() {
        let block = s![t * batch..(t + 1) * batch, ..];
        let mut dh = &d_states.slice(block) + &dh_next;
        let hp = cache.h_prev.slice(block);
        let (z, r, c) = (cache.z.slice(block), cache.r.slice(block), cache.c.slice(block));
        let mut dh_new = dh.clone();
        for b in 0..batch {
            if t < cache.lengths[b] {
                dh.row_mut(b).fill(0.0);
            } else {
                dh_new.row_mut(b).fill(0.0);
            }
        }
        // padded steps pass their gradient straight to the previous state
        let mut dh_prev = dh;
        let mut da_z = Array2::zeros((batch, n));
        let mut da_c = Array2::zeros((batch, n));
        Zip::from(&mut da_z)
            .and(&mut dh_prev)
            .and(&dh_new)
            .and(&z)
            .and(&c)
            .and(&hp)
            .for_each(|dz, dhp, &g, &z, &c, &h| {
                *dz = g * (c - h) * z * (1.0 - z);
                *dhp += g * (1.0 - z);
            });
        Zip::from(&mut da_c)
            .and(&dh_new)
            .and(&z)
            .and(&c)
            .for_each(|dc, &g, &z, &c| *dc = g * z * (1.0 - c * c));
        let rh = &r * &hp;
        let mut gh = grads.w_h.slice_mut(s![..n, ..]);
        general_mat_mul(1.0, &rh.t(), &da_c, 1.0, &mut gh);
        let d_rh = da_c.dot(&u_h.t());
        let mut da_r = Array2::zeros((batch, n));
        Zip::from(&mut da_r)
            .and(&mut dh_prev)
            .and(&d_rh)
            .and(&r)
            .and(&hp)
            .for_each(|dar, dhp, &g, &r, &h| {
                *dar = g * h * r * (1.0 - r);
                *dhp += g * r;
            });
        let mut gz = grads.w_z.slice_mut(s![..n, ..]);
        general_mat_mul(1.0, &hp.t(), &da_z, 1.0, &mut gz);
        let mut gr = grads.w_r.slice_mut(s![..n, ..]);
        general_mat_mul(1.0, &hp.t(), &da_r, 1.0, &mut gr);
        general_mat_mul(1.0, &da_z, &u_z.t(), 1.0, &mut dh_prev);
        general_mat_mul(1.0, &da_r, &u_r.t(), 1.0, &mut dh_prev);

        da.slice_mut(s![t * batch..(t + 1) * batch, ..n]).assign(&da_z);
        da.slice_mut(s![t * batch..(t + 1) * batch, n..2 * n]).assign(&da_r);
        da.slice_mut(s![t * batch..(t + 1) * batch, 2 * n..]).assign(&da_c);
        dh_next = dh_prev;
    }

    let mut d_input = Array2::zeros(cache.input.dim());
    for (k, (w, gw, gb)) in [
        (&params.w_z, &mut grads.w_z, &mut grads.b_z),
        (&params.w_r, &mut grads.w_r, &mut grads.b_r),
        (&params.w_h, &mut grads.w_h, &mut grads.b_h),
    ]
    .into_iter()
    .enumerate()
    {
        let da_k = da.slice(s![.., k * n..(k + 1) * n]);
        let mut gx = gw.slice_mut(s![n.., ..]);
        general_mat_mul(1.0, &cache.input.t(), &da_k, 1.0, &mut gx);
        *gb += &da_k.sum_axis(Axis(0));
        general_mat_mul(1.0, &da_k, &GruParams::input_block(w).t(), 1.0, &mut d_input);
    }
    (d_input, dh_next)
}

/// Single-sequence GRU from `h0` (zeros when `None`): all states `T × H`
/// and the final state.
pub fn gru_forward(
    seq: ArrayView2<'_, f64>,
    params: &GruParams,
    h0: Option<ArrayView1<'_, f64>>,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if seq.nrows() == 0 {
        return Err(Error::DimensionMismatch("empty sequence".into()));
    }
    let batch = SeqBatch::from_sequences(&[seq]);
    let h0 = h0.map(|h| h.insert_axis(Axis(0)));
    let (states, last, _) = gru_forward_seq(params, &batch, h0)?;
    Ok((states.data, last.index_axis_move(Axis(0), 0)))
}

/// Cache for a bidirectional pass.
#[derive(Debug, Clone)]
pub struct BiGruCache {
    fwd: GruCache,
    bwd: GruCache,
}

/// Forward pass over the batch and a second pass over each sample reversed
/// in time; the backward outputs are re-reversed and concatenated after the
/// forward ones, giving `2H` features per step.
pub fn bigru_forward_seq(
    fwd: &GruParams,
    bwd: &GruParams,
    input: &SeqBatch,
) -> Result<(SeqBatch, BiGruCache)> {
    let (f_states, _, f_cache) = gru_forward_seq(fwd, input, None)?;
    let (b_states, _, b_cache) = gru_forward_seq(bwd, &input.reversed(), None)?;
    let b_states = b_states.reversed();
    let (hf, hb) = (fwd.hidden(), bwd.hidden());
    let mut out = Array2::zeros((input.data.nrows(), hf + hb));
    out.slice_mut(s![.., ..hf]).assign(&f_states.data);
    out.slice_mut(s![.., hf..]).assign(&b_states.data);
    // padding rows of the forward half carry state; zero them for a clean layout
    for (i, valid) in input.mask().into_iter().enumerate() {
        if !valid {
            out.row_mut(i).fill(0.0);
        }
    }
    Ok((
        input.with_data(out),
        BiGruCache {
            fwd: f_cache,
            bwd: b_cache,
        },
    ))
}

pub fn bigru_backward_seq(
    fwd: &GruParams,
    bwd: &GruParams,
    cache: &BiGruCache,
    d_out: ArrayView2<'_, f64>,
    g_fwd: &mut GruParams,
    g_bwd: &mut GruParams,
) -> Array2<f64> {
    let hf = fwd.hidden();
    let (batch, lengths) = (cache.fwd.batch, &cache.fwd.lengths);
    let mut d_f = d_out.slice(s![.., ..hf]).to_owned();
    let mut d_b = d_out.slice(s![.., hf..]).to_owned();
    let rows = d_out.nrows();
    for i in 0..rows {
        if i / batch >= lengths[i % batch] {
            d_f.row_mut(i).fill(0.0);
            d_b.row_mut(i).fill(0.0);
        }
    }
    let (dx_f, _) = gru_backward_seq(fwd, &cache.fwd, d_f.view(), None, g_fwd);
    let d_b_rev = reverse_rows(&d_b, batch, lengths);
    let (dx_b_rev, _) = gru_backward_seq(bwd, &cache.bwd, d_b_rev.view(), None, g_bwd);
    dx_f + reverse_rows(&dx_b_rev, batch, lengths)
}

/// Single-sequence BiGRU: `T × 2H` outputs and the `2H` final state
/// `[last forward state ; backward output at the first position]`.
pub fn bigru_forward(
    seq: ArrayView2<'_, f64>,
    fwd: &GruParams,
    bwd: &GruParams,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if seq.nrows() == 0 {
        return Err(Error::DimensionMismatch("empty sequence".into()));
    }
    let (out, _) = bigru_forward_seq(fwd, bwd, &SeqBatch::from_sequences(&[seq]))?;
    let hf = fwd.hidden();
    let last = out.data.nrows() - 1;
    let mut fin = Array1::zeros(out.features());
    fin.slice_mut(s![..hf]).assign(&out.data.slice(s![last, ..hf]));
    fin.slice_mut(s![hf..]).assign(&out.data.slice(s![0, hf..]));
    Ok((out.data, fin))
}
