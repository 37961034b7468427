use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{decode, encode_audio, encode_text, merge, ModelParams};
use crate::error::{Error, Result};
use crate::nn::Mode;
use crate::text::{Vocabulary, EOS_ID, PAD_ID, SOS_ID};

/// Greedy decoding in infer mode. Returns content ids (no `<sos>`/`<eos>`),
/// at most `max_len - 2` of them.
pub fn generate_ids(features: ArrayView2<'_, f64>, params: &ModelParams, max_len: usize) -> Result<Vec<usize>> {
    // infer mode draws nothing from the rng
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let code = encode_audio(features, params, Mode::Infer, &mut rng)?;
    let mut prefix = vec![SOS_ID];
    while prefix.len() + 1 < max_len {
        let text = encode_text(&prefix, params, Mode::Infer, &mut rng)?;
        let probs = decode(merge(code.view(), text.view())?.view(), params, Mode::Infer)?;
        let last = probs.row(probs.nrows() - 1);
        let next = last
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0;
        if next == EOS_ID || next == PAD_ID {
            break;
        }
        prefix.push(next);
    }
    Ok(prefix[1..].to_vec())
}

/// Greedy caption as tokens. Reserved ids other than `<eos>` are dropped.
pub fn generate_caption(
    features: ArrayView2<'_, f64>,
    params: &ModelParams,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<String>> {
    if vocab.len() != params.config.vocab_size {
        return Err(Error::ShapeMismatch {
            name: "vocabulary".into(),
            expected: vec![params.config.vocab_size],
            found: vec![vocab.len()],
        });
    }
    Ok(vocab.decode(&generate_ids(features, params, max_len)?))
}
