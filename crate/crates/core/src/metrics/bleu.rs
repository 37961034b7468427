use super::{ngram_counts, non_empty, EvalPair};
use crate::error::{Error, Result};

/// Corpus BLEU with uniform weights over 1..=n.
///
/// Candidate n-gram counts are clipped by their maximum count in any single
/// reference and pooled over the corpus. The brevity penalty compares the
/// total candidate length with the summed closest-reference lengths. No
/// smoothing: any zero precision gives 0.
pub fn bleu_n(pairs: &[EvalPair], n: usize) -> Result<f64> {
    non_empty(pairs)?;
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidConfig(format!("BLEU order {n} not in 1..=4")));
    }
    let mut log_sum = 0.0;
    for order in 1..=n {
        let mut matched = 0usize;
        let mut total = 0usize;
        for pair in pairs {
            let cand = ngram_counts(&pair.candidate, order);
            total += cand.values().sum::<usize>();
            let refs: Vec<_> = pair
                .references
                .iter()
                .map(|r| ngram_counts(r, order))
                .collect();
            for (gram, &count) in &cand {
                let max_ref = refs
                    .iter()
                    .map(|r| r.get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                matched += count.min(max_ref);
            }
        }
        if matched == 0 || total == 0 {
            return Ok(0.0);
        }
        log_sum += (matched as f64 / total as f64).ln();
    }

    let cand_len: usize = pairs.iter().map(|p| p.candidate.len()).sum();
    let ref_len: usize = pairs.iter().map(closest_ref_len).sum();
    let bp = if cand_len < ref_len {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    } else {
        1.0
    };
    Ok(bp * (log_sum / n as f64).exp())
}

/// Reference length closest to the candidate's; ties go to the shorter.
fn closest_ref_len(pair: &EvalPair) -> usize {
    let c = pair.candidate.len() as i64;
    pair.references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&r| ((r as i64 - c).abs(), r))
        .unwrap_or(0)
}

/// BLEU-1 through BLEU-4.
pub fn bleu(pairs: &[EvalPair]) -> Result<[f64; 4]> {
    Ok([
        bleu_n(pairs, 1)?,
        bleu_n(pairs, 2)?,
        bleu_n(pairs, 3)?,
        bleu_n(pairs, 4)?,
    ])
}
