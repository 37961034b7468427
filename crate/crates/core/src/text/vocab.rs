use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const SOS: &str = "<sos>";
pub const EOS: &str = "<eos>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const SOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
pub const UNK_ID: usize = 3;
const RESERVED: [&str; 4] = [PAD, SOS, EOS, UNK];

/// Caption tokeniser. The default lowercases, splits on whitespace and
/// strips punctuation from both ends of every token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    pub lowercase: bool,
    pub strip_punctuation: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

impl Tokenizer {
    pub fn tokenize(&self, caption: &str) -> Result<Vec<String>> {
        let tokens: Vec<String> = caption
            .split_whitespace()
            .map(|raw| {
                let t = if self.strip_punctuation {
                    raw.trim_matches(|c: char| !c.is_alphanumeric())
                } else {
                    raw
                };
                if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_string()
                }
            })
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            return Err(Error::EmptyCaption);
        }
        Ok(tokens)
    }
}

pub fn tokenize(caption: &str) -> Result<Vec<String>> {
    Tokenizer::default().tokenize(caption)
}

/// Token ↔ id mapping with four reserved ids in front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        let id_to_token: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            token_to_id,
            id_to_token,
        }
    }
}

impl Vocabulary {
    /// Tokens are numbered by first occurrence; tokens seen fewer than
    /// `min_count` times are left out.
    pub fn build<S: AsRef<str>>(captions: &[Vec<S>], min_count: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let mut order: Vec<&str> = Vec::new();
        for tok in captions.iter().flatten().map(AsRef::as_ref) {
            if tok.is_empty() {
                continue;
            }
            let c = counts.entry(tok).or_insert(0);
            if *c == 0 {
                order.push(tok);
            }
            *c += 1;
        }
        let mut vocab = Self::default();
        for tok in order {
            if counts[tok] >= min_count.max(1) {
                vocab.insert(tok);
            }
        }
        vocab
    }

    fn insert(&mut self, token: &str) -> usize {
        if let Some(&id) = self.token_to_id.get(token) {
            return id;
        }
        let id = self.id_to_token.len();
        self.id_to_token.push(token.to_string());
        self.token_to_id.insert(token.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= RESERVED.len()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// Content tokens for ids up to the first `<eos>`, skipping reserved ids.
    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .take_while(|&&id| id != EOS_ID)
            .filter(|&&id| id >= RESERVED.len())
            .filter_map(|&id| self.token(id).map(str::to_string))
            .collect()
    }

    /// One token per line; line number equals id, reserved tokens first.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.id_to_token.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() < RESERVED.len() || lines[..RESERVED.len()] != RESERVED {
            return Err(Error::Parse(format!(
                "{}: vocabulary must start with {RESERVED:?}",
                path.display()
            )));
        }
        let mut vocab = Self::default();
        for (line, tok) in lines.iter().enumerate().skip(RESERVED.len()) {
            if tok.is_empty() || vocab.id(tok).is_some() {
                return Err(Error::Parse(format!(
                    "{}:{}: empty or duplicate token {tok:?}",
                    path.display(),
                    line + 1
                )));
            }
            vocab.insert(tok);
        }
        Ok(vocab)
    }
}

/// `[<sos>] + ids + [<eos>]`, right-padded with `<pad>` to `max_len`.
/// Content beyond `max_len - 2` tokens is dropped so `<eos>` always fits.
pub fn encode_caption<S: AsRef<str>>(caption: &[S], vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    assert!(max_len >= 2, "max_len must leave room for <sos> and <eos>");
    let mut ids = Vec::with_capacity(max_len);
    ids.push(SOS_ID);
    ids.extend(
        caption
            .iter()
            .take(max_len - 2)
            .map(|t| vocab.id_or_unk(t.as_ref())),
    );
    ids.push(EOS_ID);
    ids.resize(max_len, PAD_ID);
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn tokenize_lowercases_and_strips() {
        assert_eq!(tokenize("People are talking").unwrap(), toks("people are talking"));
        assert_eq!(tokenize("Rain, rain.").unwrap(), toks("rain rain"));
        assert_eq!(tokenize("  \"Don't\"  stop!  ").unwrap(), toks("don't stop"));
        let t = tokenize("Birds are chirping and singing while cars are passing").unwrap();
        assert_eq!(t.len(), 9);
    }

    #[test]
    fn tokenize_rejects_empty() {
        assert!(matches!(tokenize(""), Err(Error::EmptyCaption)));
        assert!(matches!(tokenize(" ... !! "), Err(Error::EmptyCaption)));
    }

    #[test]
    fn tokenizer_is_configurable() {
        let keep = Tokenizer {
            lowercase: false,
            strip_punctuation: false,
        };
        assert_eq!(keep.tokenize("Rain, rain.").unwrap(), toks("Rain, rain."));
    }

    #[test]
    fn vocabulary_counts_and_order() {
        let v = Vocabulary::build(&[toks("a b"), toks("b c")], 1);
        assert_eq!(v.len(), 7);
        assert_eq!(v.id("a"), Some(4));
        assert_eq!(v.id("b"), Some(5));
        assert_eq!(v.id("c"), Some(6));
        assert_eq!(v.id(SOS), Some(SOS_ID));
        assert_eq!(v.id(EOS), Some(EOS_ID));

        let with_empty = Vocabulary::build(&[vec!["a".to_string(), String::new()]], 1);
        assert_eq!(with_empty.len(), 5);
        assert_eq!(with_empty.id(""), None);

        let again = Vocabulary::build(&[toks("a b"), toks("b c")], 1);
        assert_eq!(v, again);

        let frequent = Vocabulary::build(&[toks("a b"), toks("b c")], 2);
        assert_eq!(frequent.tokens()[4..], ["b".to_string()]);
    }

    #[test]
    fn encode_frames_and_pads() {
        let v = Vocabulary::build(&[toks("a")], 1);
        assert_eq!(encode_caption(&toks("a"), &v, 5), vec![1, 4, 2, 0, 0]);
        assert_eq!(encode_caption(&toks("zzz"), &v, 4), vec![1, UNK_ID, 2, 0]);
    }

    #[test]
    fn encode_truncates_long_captions() {
        let words: Vec<String> = (0..25).map(|i| format!("w{i}")).collect();
        let v = Vocabulary::build(std::slice::from_ref(&words), 1);
        let twenty = &words[..20];
        let ids = encode_caption(twenty, &v, 22);
        assert_eq!(ids.len(), 22);
        assert_eq!(ids[0], SOS_ID);
        assert_eq!(ids[21], EOS_ID);
        assert_eq!(ids[1..21], (4..24).collect::<Vec<_>>()[..]);

        let ids = encode_caption(&words, &v, 22);
        assert_eq!(ids[21], EOS_ID);
        assert_eq!(v.decode(&ids[1..]).len(), 20);
    }

    #[test]
    fn decode_stops_at_eos() {
        let v = Vocabulary::build(&[toks("x y")], 1);
        assert_eq!(v.decode(&[4, 5, EOS_ID, 4]), toks("x y"));
        assert_eq!(v.decode(&[SOS_ID, 4, PAD_ID]), toks("x"));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = Vocabulary::build(&[toks("dog barks loudly"), toks("cat")], 1);
        v.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<pad>\n<sos>\n<eos>\n<unk>\ndog\n"));
        assert_eq!(Vocabulary::load(&path).unwrap(), v);

        fs::write(&path, "dog\ncat\n").unwrap();
        assert!(matches!(Vocabulary::load(&path), Err(Error::Parse(_))));
    }
}
