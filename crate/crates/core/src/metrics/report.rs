use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalPair;
use crate::error::{Error, Result};
use crate::text::tokenize;

/// Corpus scores in report order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub bleu_4: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub meteor: f64,
}

impl MetricScores {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serialises")
    }

    /// Two-line table: B-1, B-2, B-3, B-4, CIDEr, METEOR, ROUGE_L.
    pub fn table(&self) -> String {
        let header = ["B-1", "B-2", "B-3", "B-4", "CIDEr", "METEOR", "ROUGE_L"];
        let values = [
            self.bleu_1,
            self.bleu_2,
            self.bleu_3,
            self.bleu_4,
            self.cider,
            self.meteor,
            self.rouge_l,
        ];
        let mut top = String::new();
        let mut bottom = String::new();
        for (h, v) in header.iter().zip(values) {
            top.push_str(&format!("{h:>8}"));
            bottom.push_str(&format!("{v:>8.4}"));
        }
        format!("{top}\n{bottom}\n")
    }
}

impl fmt::Display for MetricScores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table())
    }
}

/// Split "id<TAB>rest" (falling back to the first whitespace).
fn split_id(line: &str) -> Option<(&str, &str)> {
    line.split_once('\t')
        .or_else(|| line.split_once(char::is_whitespace))
        .map(|(id, rest)| (id.trim(), rest))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<_> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect();
    if lines.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(lines)
}

/// Candidates file: one `id<TAB>caption` per line, order kept.
pub fn read_candidates(path: &Path) -> Result<Vec<(String, String)>> {
    read_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            split_id(&line)
                .map(|(id, cap)| (id.to_string(), cap.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("{}:{n}: expected id and caption", path.display())))
        })
        .collect()
}

/// References file: `id<TAB>cap1<TAB>...<TAB>capN` per line.
pub fn read_references(path: &Path) -> Result<HashMap<String, Vec<String>>> {
    let mut map = HashMap::new();
    for (n, line) in read_lines(path)? {
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or("").trim().to_string();
        let caps: Vec<String> = fields
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if id.is_empty() || caps.is_empty() {
            return Err(Error::Parse(format!(
                "{}:{n}: expected id and tab-separated references",
                path.display()
            )));
        }
        map.insert(id, caps);
    }
    Ok(map)
}

/// Pair each candidate with its references; unknown ids are an error.
pub fn build_pairs(
    candidates: &[(String, String)],
    references: &HashMap<String, Vec<String>>,
) -> Result<Vec<EvalPair>> {
    candidates
        .iter()
        .map(|(id, cap)| {
            let refs = references
                .get(id)
                .ok_or_else(|| Error::UnmatchedId(id.clone()))?;
            EvalPair::new(
                tokenize(cap)?,
                refs.iter().map(|r| tokenize(r)).collect::<Result<_>>()?,
            )
        })
        .collect()
}

/// Read both files, pair them and score the corpus.
pub fn evaluate_files(candidates: &Path, references: &Path) -> Result<MetricScores> {
    let cands = read_candidates(candidates)?;
    let refs = read_references(references)?;
    super::evaluate(&build_pairs(&cands, &refs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn table_layout() {
        let s = MetricScores {
            bleu_1: 1.0,
            bleu_2: 0.5,
            bleu_3: 0.25,
            bleu_4: 0.125,
            rouge_l: 0.4,
            cider: 0.3,
            meteor: 0.2,
        };
        let t = s.table();
        let lines: Vec<_> = t.lines().collect();
        let cols: Vec<_> = lines[0].split_whitespace().collect();
        assert_eq!(cols, ["B-1", "B-2", "B-3", "B-4", "CIDEr", "METEOR", "ROUGE_L"]);
        let vals: Vec<f64> = lines[1].split_whitespace().map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals, [1.0, 0.5, 0.25, 0.125, 0.3, 0.2, 0.4]);
        let json: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(json["rouge_l"], 0.4);
    }

    #[test]
    fn files_and_unmatched_ids() {
        let dir = tempfile::tempdir().unwrap();
        let c = dir.path().join("c.txt");
        let r = dir.path().join("r.txt");
        writeln!(fs::File::create(&c).unwrap(), "a\ta dog barks\nb\train falls").unwrap();
        writeln!(
            fs::File::create(&r).unwrap(),
            "a\ta dog barks\ta dog yelps\nb\train falls\theavy rain"
        )
        .unwrap();
        let cands = read_candidates(&c).unwrap();
        let refs = read_references(&r).unwrap();
        let pairs = build_pairs(&cands, &refs).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].references.len(), 2);

        let bad = vec![("zzz".to_string(), "x".to_string())];
        assert!(matches!(build_pairs(&bad, &refs), Err(Error::UnmatchedId(id)) if id == "zzz"));
    }
}
