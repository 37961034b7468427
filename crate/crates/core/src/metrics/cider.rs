use std::collections::{BTreeMap, HashMap};

use super::{ngram_counts, EvalPair, NGramCounts};
use crate::error::{Error, Result};

const MAX_N: usize = 4;
const SCALE: f64 = 10.0;

/// Corpus CIDEr (no length penalty), scaled by 10.
///
/// Each pair's reference set is one document for document frequency;
/// `idf = ln(pairs / max(df, 1))`. Per order, a pair scores the mean cosine
/// similarity between TF-IDF vectors of candidate and each reference.
pub fn cider(pairs: &[EvalPair]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::CorpusTooSmall(pairs.len()));
    }
    let docs = pairs.len() as f64;
    let mut total = 0.0;
    for n in 1..=MAX_N {
        let mut df: HashMap<&[String], usize> = HashMap::new();
        for pair in pairs {
            let mut seen: Vec<&[String]> = pair
                .references
                .iter()
                .flat_map(|r| ngram_counts(r, n).into_keys())
                .collect();
            seen.sort();
            seen.dedup();
            for g in seen {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        let idf = |g: &[String]| (docs / df.get(g).copied().unwrap_or(0).max(1) as f64).ln();
        let mut order_sum = 0.0;
        for pair in pairs {
            let cand = tfidf(ngram_counts(&pair.candidate, n), &idf);
            let sims: f64 = pair
                .references
                .iter()
                .map(|r| cosine(&cand, &tfidf(ngram_counts(r, n), &idf)))
                .sum();
            order_sum += sims / pair.references.len() as f64;
        }
        total += order_sum / docs;
    }
    Ok(SCALE * total / MAX_N as f64)
}

fn tfidf<'a>(counts: NGramCounts<'a>, idf: &impl Fn(&[String]) -> f64) -> BTreeMap<&'a [String], f64> {
    counts
        .into_iter()
        .map(|(g, c)| (g, c as f64 * idf(g)))
        .collect()
}

fn cosine(a: &BTreeMap<&[String], f64>, b: &BTreeMap<&[String], f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(c: &str, refs: &[&str]) -> EvalPair {
        EvalPair::from_text(c, refs).unwrap()
    }

    #[test]
    fn exact_disjoint_corpus_scores_ten() {
        let pairs = vec![
            pair("dogs bark at night", &["dogs bark at night"]),
            pair("rain hits the window", &["rain hits the window"]),
        ];
        assert!((cider(&pairs).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn no_overlap_scores_zero() {
        let pairs = vec![
            pair("x y z w", &["dogs bark at night"]),
            pair("q r s t", &["rain hits the window"]),
        ];
        assert_eq!(cider(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn ubiquitous_ngram_carries_no_weight() {
        // "the" appears in every document, so matching only it scores 0
        let pairs = vec![
            pair("the", &["the dog"]),
            pair("the", &["the rain"]),
        ];
        assert_eq!(cider(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn needs_two_pairs() {
        assert!(matches!(cider(&[pair("a", &["a"])]), Err(Error::CorpusTooSmall(1))));
    }
}
