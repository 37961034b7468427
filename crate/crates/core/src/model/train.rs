use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{backward_batch, forward_batch, update_running_stats, Example, ModelParams, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::{Adam, Mode, Parameters};

/// One teacher-forced step: forward, backward, Adam update, running-stat
/// update. Returns the batch loss before the update.
pub fn train_step<R: Rng + ?Sized>(
    params: &mut ModelParams,
    adam: &mut Adam,
    batch: &[Example<'_>],
    config: &TrainConfig,
    rng: &mut R,
) -> Result<f64> {
    let (loss, cache) = forward_batch(params, batch, Mode::Train, rng)?;
    let mut grads = backward_batch(params, &cache);
    if !loss.is_finite() || !grads.all_finite() {
        return Err(Error::NonFiniteGradient(format!("training step at loss {loss}")));
    }
    if let Some(max) = config.clip_norm {
        let norm = grads.global_norm();
        if norm > max {
            grads.scale(max / norm);
        }
    }
    adam.step(params, &grads)?;
    update_running_stats(params, &cache);
    Ok(loss)
}

/// Infer-mode loss pooled over every prediction position of `examples`.
pub fn evaluate_loss(params: &ModelParams, examples: &[Example<'_>], batch_size: usize) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut sum, mut tokens) = (0.0, 0usize);
    for chunk in examples.chunks(batch_size.max(1)) {
        let (loss, cache) = forward_batch(params, chunk, Mode::Infer, &mut rng)?;
        sum += loss * cache.tokens as f64;
        tokens += cache.tokens;
    }
    Ok(sum / tokens as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Train-mode loss, token-weighted over the epoch's steps.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (minimum validation loss).
    pub best_epoch: Option<usize>,
}

/// Train for `config.epochs` epochs with per-epoch shuffling. When `val` is
/// non-empty, `params` ends up at the epoch with the lowest validation loss;
/// otherwise at the last epoch.
pub fn fit(
    params: &mut ModelParams,
    train: &[Example<'_>],
    val: &[Example<'_>],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    config.validate()?;
    if train.is_empty() && config.epochs > 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(config.adam);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TrainReport::default();
    let mut best: Option<(f64, ModelParams)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut tokens) = (0.0, 0usize);
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<Example<'_>> = idx.iter().map(|&i| train[i]).collect();
            let n: usize = batch.iter().map(Example::target_count).sum();
            let loss = train_step(params, &mut adam, &batch, config, &mut rng)?;
            sum += loss * n as f64;
            tokens += n;
        }
        let val_loss = if val.is_empty() {
            None
        } else {
            Some(evaluate_loss(params, val, config.batch_size)?)
        };
        let record = EpochRecord {
            epoch,
            train_loss: sum / tokens.max(1) as f64,
            val_loss,
        };
        log::info!(
            "epoch {epoch}: train_loss {:.5} val_loss {}",
            record.train_loss,
            val_loss.map_or("-".to_string(), |v| format!("{v:.5}"))
        );
        on_epoch(&record);
        report.history.push(record);
        match val_loss {
            Some(v) if best.as_ref().is_none_or(|(b, _)| v < *b) => {
                best = Some((v, params.clone()));
                report.best_epoch = Some(epoch);
            }
            None => report.best_epoch = Some(epoch),
            _ => {}
        }
    }
    if let Some((_, p)) = best {
        *params = p;
    }
    Ok(report)
}

/// `epoch,train_loss,val_loss` CSV; missing validation loss is left blank.
pub fn write_training_log(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Error::Parse(format!("{}: {e}", path.display()));
    w.write_record(["epoch", "train_loss", "val_loss"]).map_err(csv_err)?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            r.train_loss.to_string(),
            r.val_loss.map_or(String::new(), |v| v.to_string()),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
