use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use super::{non_empty, EvalPair};
use crate::error::Result;

const ALPHA: f64 = 0.9;
const PENALTY_GAMMA: f64 = 0.5;
const PENALTY_BETA: f64 = 3.0;

/// Porter-family English stem of a lowercase token.
pub fn stem(token: &str) -> String {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER
        .get_or_init(|| Stemmer::create(Algorithm::English))
        .stem(token)
        .into_owned()
}

/// Greedy two-stage alignment (exact, then stem). Returns matched
/// `(candidate index, reference index)` pairs sorted by candidate index.
fn align(cand: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut cand_used = vec![false; cand.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut matches = Vec::new();
    let cand_stems: Vec<String> = cand.iter().map(|t| stem(t)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t)).collect();
    for stage in 0..2 {
        for i in 0..cand.len() {
            if cand_used[i] {
                continue;
            }
            let hit = (0..reference.len()).find(|&j| {
                !ref_used[j]
                    && match stage {
                        0 => cand[i] == reference[j],
                        _ => cand_stems[i] == ref_stems[j],
                    }
            });
            if let Some(j) = hit {
                cand_used[i] = true;
                ref_used[j] = true;
                matches.push((i, j));
            }
        }
    }
    matches.sort_unstable();
    matches
}

fn score_against(cand: &[String], reference: &[String]) -> f64 {
    let matches = align(cand, reference);
    let m = matches.len();
    if m == 0 {
        return 0.0;
    }
    let chunks = 1 + matches
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let p = m as f64 / cand.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = p * r / (ALPHA * p + (1.0 - ALPHA) * r);
    let penalty = PENALTY_GAMMA * (chunks as f64 / m as f64).powf(PENALTY_BETA);
    f_mean * (1.0 - penalty)
}

/// Best score of the candidate over its references.
pub fn meteor_sentence(pair: &EvalPair) -> f64 {
    pair.references
        .iter()
        .map(|r| score_against(&pair.candidate, r))
        .fold(0.0, f64::max)
}

pub fn meteor(pairs: &[EvalPair]) -> Result<f64> {
    non_empty(pairs)?;
    Ok(pairs.iter().map(meteor_sentence).sum::<f64>() / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(c: &str, refs: &[&str]) -> EvalPair {
        EvalPair::from_text(c, refs).unwrap()
    }

    #[test]
    fn identical_sentence() {
        for l in 1..6 {
            let words: Vec<String> = (0..l).map(|i| format!("w{i}")).collect();
            let text = words.join(" ");
            let s = meteor(&[pair(&text, &[&text])]).unwrap();
            let expected = 1.0 - 0.5 / (l as f64).powi(3);
            assert!((s - expected).abs() < 1e-12, "L={l}: {s} vs {expected}");
        }
    }

    #[test]
    fn no_match() {
        assert_eq!(meteor(&[pair("a b", &["c d"])]).unwrap(), 0.0);
    }

    #[test]
    fn stem_match() {
        assert_eq!(stem("cats"), "cat");
        assert_eq!(stem("cat"), "cat");
        let p = pair("cats", &["cat"]);
        assert_eq!(align(&p.candidate, &p.references[0]), vec![(0, 0)]);
        assert!((meteor_sentence(&p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_stage_wins_over_stem() {
        let p = pair("dogs dog", &["dog dogs"]);
        // exact: dogs->1, dog->0
        assert_eq!(align(&p.candidate, &p.references[0]), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn chunk_count() {
        // matches a->0, b->1 contiguous; d->3 separate chunk
        let p = pair("a b d", &["a b c d"]);
        let s = score_against(&p.candidate, &p.references[0]);
        let (pr, re) = (1.0, 0.75);
        let f = pr * re / (0.9 * pr + 0.1 * re);
        assert!((s - f * (1.0 - 0.5 * (2.0f64 / 3.0).powi(3))).abs() < 1e-12);
    }
}
