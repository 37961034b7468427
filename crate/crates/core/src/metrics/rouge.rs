use super::{non_empty, EvalPair};
use crate::error::Result;

pub const ROUGE_BETA: f64 = 1.2;

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Best LCS F-measure of the candidate over its references.
pub fn rouge_l_sentence(pair: &EvalPair) -> f64 {
    let beta2 = ROUGE_BETA * ROUGE_BETA;
    pair.references
        .iter()
        .map(|r| {
            let lcs = lcs_len(&pair.candidate, r) as f64;
            if lcs == 0.0 {
                return 0.0;
            }
            let p = lcs / pair.candidate.len() as f64;
            let rec = lcs / r.len() as f64;
            (1.0 + beta2) * p * rec / (rec + beta2 * p)
        })
        .fold(0.0, f64::max)
}

/// Mean sentence ROUGE-L over the corpus.
pub fn rouge_l(pairs: &[EvalPair]) -> Result<f64> {
    non_empty(pairs)?;
    Ok(pairs.iter().map(rouge_l_sentence).sum::<f64>() / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(c: &str, refs: &[&str]) -> EvalPair {
        EvalPair::from_text(c, refs).unwrap()
    }

    #[test]
    fn cases() {
        assert_eq!(rouge_l(&[pair("a b c", &["a b c"])]).unwrap(), 1.0);
        let f = rouge_l(&[pair("a b c", &["a c d"])]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(rouge_l(&[pair("a b", &["c d"])]).unwrap(), 0.0);
    }

    #[test]
    fn lcs() {
        let a: Vec<char> = "ABCBDAB".chars().collect();
        let b: Vec<char> = "BDCABA".chars().collect();
        assert_eq!(lcs_len(&a, &b), 4);
        assert_eq!(lcs_len::<char>(&[], &b), 0);
    }
}
