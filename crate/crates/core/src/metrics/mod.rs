//! Multi-reference caption metrics: corpus BLEU-1..4, ROUGE-L, CIDEr and a
//! METEOR variant with exact and stem matching.

mod bleu;
mod cider;
mod meteor;
mod ngram;
mod report;
mod rouge;

pub use bleu::{bleu, bleu_n};
pub use cider::cider;
pub use meteor::{meteor, meteor_sentence, stem};
pub use ngram::{ngram_counts, NGramCounts};
pub use report::{build_pairs, evaluate_files, read_candidates, read_references, MetricScores};
pub use rouge::{lcs_len, rouge_l, rouge_l_sentence, ROUGE_BETA};

use crate::error::{Error, Result};
use crate::text::tokenize;

/// One candidate caption with its reference captions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl EvalPair {
    pub fn new(candidate: Vec<String>, references: Vec<Vec<String>>) -> Result<Self> {
        if candidate.is_empty() || references.is_empty() || references.iter().any(Vec::is_empty) {
            return Err(Error::EmptyCaption);
        }
        Ok(Self {
            candidate,
            references,
        })
    }

    /// Tokenise raw caption text with the default tokenizer.
    pub fn from_text<S: AsRef<str>>(candidate: &str, references: &[S]) -> Result<Self> {
        Self::new(
            tokenize(candidate)?,
            references
                .iter()
                .map(|r| tokenize(r.as_ref()))
                .collect::<Result<_>>()?,
        )
    }
}

pub(crate) fn non_empty(pairs: &[EvalPair]) -> Result<()> {
    if pairs.is_empty() {
        Err(Error::EmptyCorpus)
    } else {
        Ok(())
    }
}

/// All seven scores for a corpus. CIDEr needs at least two pairs; for a
/// single pair it is reported as 0.
pub fn evaluate(pairs: &[EvalPair]) -> Result<MetricScores> {
    non_empty(pairs)?;
    let cider = match cider(pairs) {
        Ok(c) => c,
        Err(Error::CorpusTooSmall(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(MetricScores {
        bleu_1: bleu_n(pairs, 1)?,
        bleu_2: bleu_n(pairs, 2)?,
        bleu_3: bleu_n(pairs, 3)?,
        bleu_4: bleu_n(pairs, 4)?,
        rouge_l: rouge_l(pairs)?,
        cider,
        meteor: meteor(pairs)?,
    })
}
