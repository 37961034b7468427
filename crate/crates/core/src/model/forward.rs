use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::ModelParams;
use crate::error::{Error, Result};
use crate::nn::{
    bigru_backward_seq, bigru_forward_seq, cross_entropy_loss, dropout_forward, embedding_backward,
    embedding_forward, gru_backward_seq, gru_forward_seq, leaky_relu, leaky_relu_backward,
    softmax_rows, BatchNormCache, BiGruCache, GruCache, Mode, SeqBatch,
};
use crate::text::PAD_ID;

/// One training example: `T × audio_dim` features and an encoded caption
/// `[<sos>, w1, .., wn, <eos>, <pad>, ..]`.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: ArrayView2<'a, f64>,
    pub caption: &'a [usize],
}

impl Example<'_> {
    /// Unmasked prediction positions: content words plus `<eos>`.
    pub fn target_count(&self) -> usize {
        self.caption.iter().skip(1).filter(|&&id| id != PAD_ID).count()
    }
}

fn activate(y: &Array2<f64>, alpha: f64) -> Array2<f64> {
    y.mapv(|v| leaky_relu(v, alpha))
}

/// Time-major id layout shared by the text encoder and the loss.
#[derive(Debug, Clone)]
pub(crate) struct TextBatch {
    ids: Vec<usize>,
    batch: usize,
    lengths: Vec<usize>,
}

impl TextBatch {
    fn from_prefixes(prefixes: &[&[usize]]) -> Self {
        let batch = prefixes.len();
        let lengths: Vec<usize> = prefixes.iter().map(|p| p.len()).collect();
        let steps = lengths.iter().copied().max().unwrap_or(0);
        let mut ids = vec![PAD_ID; steps * batch];
        for (b, p) in prefixes.iter().enumerate() {
            for (t, &id) in p.iter().enumerate() {
                ids[t * batch + b] = id;
            }
        }
        Self { ids, batch, lengths }
    }

    fn steps(&self) -> usize {
        self.ids.len() / self.batch.max(1)
    }

    fn mask(&self) -> Vec<bool> {
        (0..self.ids.len())
            .map(|i| i / self.batch < self.lengths[i % self.batch])
            .collect()
    }
}

/// Teacher forcing: inputs `caption[..n-1]`, targets `caption[1..]`, cut at
/// the last non-pad target. Returns the input batch and time-major targets.
fn teacher_forcing(captions: &[&[usize]]) -> Result<(TextBatch, Vec<usize>)> {
    let mut prefixes = Vec::with_capacity(captions.len());
    let mut targets = Vec::with_capacity(captions.len());
    for cap in captions {
        if cap.len() < 2 {
            return Err(Error::EmptyCaption);
        }
        let tgt = &cap[1..];
        let len = tgt.iter().rposition(|&id| id != PAD_ID).map_or(0, |i| i + 1);
        prefixes.push(&cap[..len]);
        targets.push(&tgt[..len]);
    }
    let batch = TextBatch::from_prefixes(&prefixes);
    let mut flat = vec![PAD_ID; batch.ids.len()];
    for (b, tgt) in targets.iter().enumerate() {
        for (t, &id) in tgt.iter().enumerate() {
            flat[t * batch.batch + b] = id;
        }
    }
    Ok((batch, flat))
}

#[derive(Debug, Clone)]
pub(crate) struct AudioCache {
    lengths: Vec<usize>,
    batch: usize,
    bi1: BiGruCache,
    bn1: BatchNormCache,
    y1: Array2<f64>,
    bi2: BiGruCache,
    bn2: BatchNormCache,
    y2: Array2<f64>,
}

/// Batched audio encoder. Returns one code row per sample.
pub(crate) fn audio_forward<R: Rng + ?Sized>(
    p: &ModelParams,
    features: &[ArrayView2<'_, f64>],
    mode: Mode,
    rng: &mut R,
) -> Result<(Array2<f64>, AudioCache)> {
    let c = &p.config;
    let mut normed = Vec::with_capacity(features.len());
    for f in features {
        if f.ncols() != c.audio_dim {
            return Err(Error::DimensionMismatch(format!(
                "features have {} columns, model expects audio_dim {}",
                f.ncols(),
                c.audio_dim
            )));
        }
        if f.nrows() == 0 {
            return Err(Error::EmptyFeature);
        }
        normed.push((f - &p.input_mean) / &p.input_std);
    }
    let views: Vec<_> = normed.iter().map(|a| a.view()).collect();
    let x = SeqBatch::from_sequences(&views);
    let mask = x.mask();
    let (xd, _) = dropout_forward(&x.data, c.dropout, mode, rng);

    let (o1, bi1) = bigru_forward_seq(&p.bigru1_fwd, &p.bigru1_bwd, &x.with_data(xd))?;
    let (y1, bn1) = p.bn_audio1.forward(o1.data.view(), &mask, mode);
    let a1 = activate(&y1, c.alpha);
    let (o2, bi2) = bigru_forward_seq(&p.bigru2_fwd, &p.bigru2_bwd, &x.with_data(a1))?;
    let (y2, bn2) = p.bn_audio2.forward(o2.data.view(), &mask, mode);
    let a2 = activate(&y2, c.alpha);

    let h = c.bigru2_cells;
    let batch = x.batch;
    let mut codes = Array2::zeros((batch, 2 * h));
    for (b, &len) in x.lengths.iter().enumerate() {
        let last = (len - 1) * batch + b;
        codes.slice_mut(s![b, ..h]).assign(&a2.slice(s![last, ..h]));
        codes.slice_mut(s![b, h..]).assign(&a2.slice(s![b, h..]));
    }
    let cache = AudioCache {
        lengths: x.lengths.clone(),
        batch,
        bi1,
        bn1,
        y1,
        bi2,
        bn2,
        y2,
    };
    Ok((codes, cache))
}

fn audio_backward(p: &ModelParams, cache: &AudioCache, d_codes: &Array2<f64>, g: &mut ModelParams) {
    let (h, batch, alpha) = (p.config.bigru2_cells, cache.batch, p.config.alpha);
    let mut d_a2 = Array2::zeros(cache.y2.dim());
    for (b, &len) in cache.lengths.iter().enumerate() {
        let last = (len - 1) * batch + b;
        let mut fwd = d_a2.slice_mut(s![last, ..h]);
        fwd += &d_codes.slice(s![b, ..h]);
        let mut bwd = d_a2.slice_mut(s![b, h..]);
        bwd += &d_codes.slice(s![b, h..]);
    }
    let d_y2 = leaky_relu_backward(&cache.y2, &d_a2, alpha);
    let d_o2 = p.bn_audio2.backward(&cache.bn2, d_y2.view(), &mut g.bn_audio2);
    let d_a1 = bigru_backward_seq(
        &p.bigru2_fwd,
        &p.bigru2_bwd,
        &cache.bi2,
        d_o2.view(),
        &mut g.bigru2_fwd,
        &mut g.bigru2_bwd,
    );
    let d_y1 = leaky_relu_backward(&cache.y1, &d_a1, alpha);
    let d_o1 = p.bn_audio1.backward(&cache.bn1, d_y1.view(), &mut g.bn_audio1);
    // the gradient on the audio input itself is not needed
    bigru_backward_seq(
        &p.bigru1_fwd,
        &p.bigru1_bwd,
        &cache.bi1,
        d_o1.view(),
        &mut g.bigru1_fwd,
        &mut g.bigru1_bwd,
    );
}

#[derive(Debug, Clone)]
pub(crate) struct TextCache {
    batch: TextBatch,
    mask: Vec<bool>,
    dropout: Option<Array2<f64>>,
    gru: GruCache,
    bn: BatchNormCache,
    y: Array2<f64>,
}

/// Embedding → dropout → GRU → batch norm → LeakyReLU, all prefix states.
pub(crate) fn text_forward<R: Rng + ?Sized>(
    p: &ModelParams,
    batch: TextBatch,
    mode: Mode,
    rng: &mut R,
) -> Result<(Array2<f64>, TextCache)> {
    let mask = batch.mask();
    let mut emb = embedding_forward(&p.embedding, &batch.ids)?;
    for (mut row, &valid) in emb.axis_iter_mut(Axis(0)).zip(&mask) {
        if !valid {
            row.fill(0.0);
        }
    }
    let (ed, dropout) = dropout_forward(&emb, p.config.dropout, mode, rng);
    let seq = SeqBatch::new(ed, batch.lengths.clone());
    let (states, _, gru) = gru_forward_seq(&p.text_gru, &seq, None)?;
    let (y, bn) = p.bn_text.forward(states.data.view(), &mask, mode);
    let act = activate(&y, p.config.alpha);
    Ok((
        act,
        TextCache {
            batch,
            mask,
            dropout,
            gru,
            bn,
            y,
        },
    ))
}

fn text_backward(p: &ModelParams, cache: &TextCache, d_act: &Array2<f64>, g: &mut ModelParams) {
    let d_y = leaky_relu_backward(&cache.y, d_act, p.config.alpha);
    let d_states = p.bn_text.backward(&cache.bn, d_y.view(), &mut g.bn_text);
    let (mut d_in, _) = gru_backward_seq(&p.text_gru, &cache.gru, d_states.view(), None, &mut g.text_gru);
    if let Some(m) = &cache.dropout {
        d_in *= m;
    }
    for (mut row, &valid) in d_in.axis_iter_mut(Axis(0)).zip(&cache.mask) {
        if !valid {
            row.fill(0.0);
        }
    }
    embedding_backward(&mut g.embedding, &cache.batch.ids, d_in.view());
}

/// Add each sample's audio code to its valid text rows.
fn merge_rows(codes: &Array2<f64>, text: &Array2<f64>, batch: usize, mask: &[bool]) -> Array2<f64> {
    let mut merged = text.clone();
    for (i, mut row) in merged.axis_iter_mut(Axis(0)).enumerate() {
        if mask[i] {
            row += &codes.row(i % batch);
        }
    }
    merged
}

#[derive(Debug, Clone)]
pub(crate) struct DecoderCache {
    gru: GruCache,
    bn: BatchNormCache,
    y: Array2<f64>,
    act: Array2<f64>,
}

/// GRU → batch norm → LeakyReLU → dense → softmax over the merged sequence.
pub(crate) fn decoder_forward(
    p: &ModelParams,
    merged: &SeqBatch,
    mode: Mode,
) -> Result<(Array2<f64>, DecoderCache)> {
    let mask = merged.mask();
    let (states, _, gru) = gru_forward_seq(&p.decoder_gru, merged, None)?;
    let (y, bn) = p.bn_decoder.forward(states.data.view(), &mask, mode);
    let act = activate(&y, p.config.alpha);
    let probs = softmax_rows(p.output.forward(act.view())?.view());
    Ok((probs, DecoderCache { gru, bn, y, act }))
}

fn decoder_backward(p: &ModelParams, cache: &DecoderCache, d_logits: &Array2<f64>, g: &mut ModelParams) -> Array2<f64> {
    let d_act = p.output.backward(cache.act.view(), d_logits.view(), &mut g.output);
    let d_y = leaky_relu_backward(&cache.y, &d_act, p.config.alpha);
    let d_states = p.bn_decoder.backward(&cache.bn, d_y.view(), &mut g.bn_decoder);
    let (d_merged, _) = gru_backward_seq(&p.decoder_gru, &cache.gru, d_states.view(), None, &mut g.decoder_gru);
    d_merged
}

/// Everything a batch forward pass leaves behind for backward.
#[derive(Debug, Clone)]
pub struct BatchCache {
    audio: AudioCache,
    text: TextCache,
    decoder: DecoderCache,
    d_logits: Array2<f64>,
    /// Time-major `(steps · batch) × V` next-word distributions.
    pub probs: Array2<f64>,
    /// Unmasked prediction positions in the batch.
    pub tokens: usize,
}

/// Teacher-forced forward pass and masked mean cross-entropy over the
/// pooled prediction positions of the batch.
pub fn forward_batch<R: Rng + ?Sized>(
    p: &ModelParams,
    batch: &[Example<'_>],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, BatchCache)> {
    if batch.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let features: Vec<_> = batch.iter().map(|e| e.features).collect();
    let captions: Vec<_> = batch.iter().map(|e| e.caption).collect();
    let (text_batch, targets) = teacher_forcing(&captions)?;
    if text_batch.steps() == 0 {
        return Err(Error::EmptyAfterMask);
    }
    let (codes, audio) = audio_forward(p, &features, mode, rng)?;
    let (text_act, text) = text_forward(p, text_batch, mode, rng)?;
    let merged = merge_rows(&codes, &text_act, batch.len(), &text.mask);
    let merged = SeqBatch::new(merged, text.batch.lengths.clone());
    let (probs, decoder) = decoder_forward(p, &merged, mode)?;
    let (loss, d_logits) = cross_entropy_loss(probs.view(), &targets, PAD_ID)?;
    let tokens = targets.iter().filter(|&&t| t != PAD_ID).count();
    Ok((
        loss,
        BatchCache {
            audio,
            text,
            decoder,
            d_logits,
            probs,
            tokens,
        },
    ))
}

/// Gradient of the batch loss with respect to every trainable tensor.
pub fn backward_batch(p: &ModelParams, cache: &BatchCache) -> ModelParams {
    let mut g = p.zeros_like();
    let d_merged = decoder_backward(p, &cache.decoder, &cache.d_logits, &mut g);
    let batch = cache.text.batch.batch;
    let mut d_codes = Array2::zeros((batch, p.config.code_dim()));
    let mut d_text = d_merged;
    for (i, mut row) in d_text.axis_iter_mut(Axis(0)).enumerate() {
        if cache.text.mask[i] {
            let mut dc = d_codes.row_mut(i % batch);
            dc += &row;
        } else {
            row.fill(0.0);
        }
    }
    text_backward(p, &cache.text, &d_text, &mut g);
    audio_backward(p, &cache.audio, &d_codes, &mut g);
    g
}

/// Loss and gradient in one call.
pub fn loss_and_grad<R: Rng + ?Sized>(
    p: &ModelParams,
    batch: &[Example<'_>],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, ModelParams)> {
    let (loss, cache) = forward_batch(p, batch, mode, rng)?;
    Ok((loss, backward_batch(p, &cache)))
}

/// Fold a train-mode pass's batch statistics into the running ones.
pub fn update_running_stats(p: &mut ModelParams, cache: &BatchCache) {
    p.bn_audio1.update_running(&cache.audio.bn1);
    p.bn_audio2.update_running(&cache.audio.bn2);
    p.bn_text.update_running(&cache.text.bn);
    p.bn_decoder.update_running(&cache.decoder.bn);
}

/// Audio code of a single clip (`2·bigru2_cells` values).
pub fn encode_audio<R: Rng + ?Sized>(
    features: ArrayView2<'_, f64>,
    params: &ModelParams,
    mode: Mode,
    rng: &mut R,
) -> Result<Array1<f64>> {
    let (codes, _) = audio_forward(params, &[features], mode, rng)?;
    Ok(codes.index_axis_move(Axis(0), 0))
}

/// Text-encoder states for a prefix, one row per id.
pub fn encode_text<R: Rng + ?Sized>(
    prefix_ids: &[usize],
    params: &ModelParams,
    mode: Mode,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if prefix_ids.is_empty() {
        return Err(Error::EmptyCaption);
    }
    let (act, _) = text_forward(params, TextBatch::from_prefixes(&[prefix_ids]), mode, rng)?;
    Ok(act)
}

/// Add the audio code to every text row.
pub fn merge(audio_code: ArrayView1<'_, f64>, text_codes: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if audio_code.len() != text_codes.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "audio code has {} values, text codes have {} columns",
            audio_code.len(),
            text_codes.ncols()
        )));
    }
    Ok(&text_codes + &audio_code)
}

/// Next-word distributions for a merged sequence, one row per position.
pub fn decode(merged: ArrayView2<'_, f64>, params: &ModelParams, mode: Mode) -> Result<Array2<f64>> {
    if merged.ncols() != params.config.text_gru_cells {
        return Err(Error::DimensionMismatch(format!(
            "merged rows have {} columns, decoder expects {}",
            merged.ncols(),
            params.config.text_gru_cells
        )));
    }
    if merged.nrows() == 0 {
        return Err(Error::EmptyCaption);
    }
    let seq = SeqBatch::from_sequences(&[merged]);
    let (probs, _) = decoder_forward(params, &seq, mode)?;
    Ok(probs)
}
