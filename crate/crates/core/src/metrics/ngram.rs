use std::collections::HashMap;

/// n-gram → occurrence count.
pub type NGramCounts<'a> = HashMap<&'a [String], usize>;

pub fn ngram_counts(tokens: &[String], n: usize) -> NGramCounts<'_> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}
