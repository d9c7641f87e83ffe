//! Word-level and WordPiece tokenization.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const UNK: &str = "[UNK]";
pub const PAD: &str = "[PAD]";

/// Words longer than this many characters become the unknown token.
pub const MAX_WORDPIECE_CHARS: usize = 100;

const ENGLISH_STOPWORDS: &str = include_str!("../data/english_stopwords.txt");

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl From<Vec<String>> for TokenSequence {
    fn from(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        Self { tokens }
    }
}

impl<'a> From<&[&'a str]> for TokenSequence {
    fn from(tokens: &[&'a str]) -> Self {
        tokens.iter().map(|t| t.to_string()).collect::<Vec<_>>().into()
    }
}

/// Alphanumeric runs become tokens, every other non-whitespace character is a token on
/// its own, whitespace is discarded.
pub fn basic_tokenize(text: &str, lowercase: bool) -> TokenSequence {
    let lowered;
    let text = if lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            run_start.get_or_insert(i);
            continue;
        }
        if let Some(start) = run_start.take() {
            tokens.push(text[start..i].to_string());
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_string());
        }
    }
    if let Some(start) = run_start {
        tokens.push(text[start..].to_string());
    }
    TokenSequence { tokens }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The classic 179-word English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|w| !w.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<String> for StopWords {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

pub fn remove_stopwords(seq: &TokenSequence, stoplist: &StopWords) -> TokenSequence {
    TokenSequence {
        tokens: seq
            .tokens
            .iter()
            .filter(|t| !stoplist.contains(t))
            .cloned()
            .collect(),
    }
}

/// Adjacent `n`-token windows joined by a single space.
pub fn ngrams(seq: &TokenSequence, n: usize) -> Result<TokenSequence> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
    }
    if n == 1 {
        return Ok(seq.clone());
    }
    Ok(TokenSequence {
        tokens: seq.tokens.windows(n).map(|w| w.join(" ")).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordPieceVocab {
    id_of: HashMap<String, u32>,
    tokens: Vec<String>,
    pub cls_id: u32,
    pub sep_id: u32,
    pub unk_id: u32,
    pub pad_id: u32,
}

impl WordPieceVocab {
    /// One token per line; the line number (from 0) is the id.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_tokens(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut id_of = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::Format(format!("vocab line {} is empty", id + 1)));
            }
            if id_of.insert(tok.clone(), id as u32).is_some() {
                return Err(Error::Format(format!("vocab token {tok:?} appears twice")));
            }
        }
        let special = |name: &str| {
            id_of
                .get(name)
                .copied()
                .ok_or_else(|| Error::Format(format!("vocab lacks special token {name}")))
        };
        Ok(Self {
            cls_id: special(CLS)?,
            sep_id: special(SEP)?,
            unk_id: special(UNK)?,
            pad_id: special(PAD)?,
            id_of,
            tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.id_of.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.cls_id || id == self.sep_id || id == self.pad_id
    }
}

/// Lowercases, basic-tokenizes, then splits each word greedily into the longest
/// vocabulary pieces; continuation pieces carry a `##` prefix. A word with any
/// unmatched position becomes `[UNK]` as a whole.
pub fn wordpiece_tokenize(text: &str, vocab: &WordPieceVocab) -> TokenSequence {
    let mut out = Vec::new();
    for word in basic_tokenize(text, true).tokens {
        match split_word(&word, vocab) {
            Some(pieces) => out.extend(pieces),
            None => out.push(UNK.to_string()),
        }
    }
    TokenSequence { tokens: out }
}

fn split_word(word: &str, vocab: &WordPieceVocab) -> Option<Vec<String>> {
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n_chars = bounds.len() - 1;
    if n_chars > MAX_WORDPIECE_CHARS {
        return None;
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < n_chars {
        let mut found = None;
        for end in (start + 1..=n_chars).rev() {
            let sub = &word[bounds[start]..bounds[end]];
            let candidate = if start > 0 {
                format!("##{sub}")
            } else {
                sub.to_string()
            };
            if vocab.id_of.contains_key(&candidate) {
                found = Some((candidate, end));
                break;
            }
        }
        let (piece, end) = found?;
        pieces.push(piece);
        start = end;
    }
    Some(pieces)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub input_ids: Vec<u32>,
    pub segment_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.input_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_ids.is_empty()
    }

    /// Number of non-padding positions.
    pub fn active_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }
}

/// `[CLS]` + at most `max_length - 2` token ids + `[SEP]`, then optional padding up to
/// `pad_to` positions. All segment ids are 0.
pub fn encode(
    seq: &TokenSequence,
    vocab: &WordPieceVocab,
    max_length: usize,
    pad_to: Option<usize>,
) -> Result<EncodedSequence> {
    if max_length < 3 {
        return Err(Error::InvalidArgument(format!("max_length must be at least 3, got {max_length}")));
    }
    if let Some(target) = pad_to {
        if target > max_length {
            return Err(Error::InvalidArgument(format!(
                "pad target {target} exceeds max_length {max_length}"
            )));
        }
    }
    let kept = seq.len().min(max_length - 2);
    let mut input_ids = Vec::with_capacity(pad_to.unwrap_or(kept + 2).max(kept + 2));
    input_ids.push(vocab.cls_id);
    input_ids.extend(
        seq.tokens[..kept]
            .iter()
            .map(|t| vocab.id(t).unwrap_or(vocab.unk_id)),
    );
    input_ids.push(vocab.sep_id);
    let active = input_ids.len();
    let total = pad_to.map_or(active, |t| t.max(active));
    input_ids.resize(total, vocab.pad_id);
    let attention_mask = (0..total).map(|i| u8::from(i < active)).collect();
    Ok(EncodedSequence {
        input_ids,
        segment_ids: vec![0; total],
        attention_mask,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn toks(seq: &TokenSequence) -> Vec<&str> {
        seq.iter().collect()
    }

    fn vocab(extra: &[&str]) -> WordPieceVocab {
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP].iter().map(|s| s.to_string()).collect();
        tokens.extend(extra.iter().map(|s| s.to_string()));
        WordPieceVocab::from_tokens(tokens).unwrap()
    }

    #[test]
    fn basic_rules() {
        assert_eq!(toks(&basic_tokenize("Trump's bill!", true)), ["trump", "'", "s", "bill", "!"]);
        assert!(basic_tokenize("", true).is_empty());
        assert_eq!(toks(&basic_tokenize("abc", false)), ["abc"]);
        assert_eq!(toks(&basic_tokenize("U.S. Senate", false)), ["U", ".", "S", ".", "Senate"]);
        assert_eq!(toks(&basic_tokenize("  Café\tx5 №", true)), ["café", "x5", "№"]);
    }

    #[test]
    fn shipped_stoplist() {
        let stop = StopWords::english();
        assert_eq!(stop.len(), 179);
        let seq = TokenSequence::from(&["the", "bill", "is", "real"][..]);
        assert_eq!(toks(&remove_stopwords(&seq, &stop)), ["bill", "real"]);
        assert_eq!(remove_stopwords(&seq, &StopWords::default()), seq);
        let all = TokenSequence::from(&["the", "a", "of"][..]);
        assert!(remove_stopwords(&all, &stop).is_empty());
    }

    #[test]
    fn ngram_cases() {
        let seq = TokenSequence::from(&["a", "b", "c"][..]);
        assert_eq!(toks(&ngrams(&seq, 2).unwrap()), ["a b", "b c"]);
        assert!(ngrams(&TokenSequence::from(&["a"][..]), 2).unwrap().is_empty());
        assert!(ngrams(&seq, 0).is_err());
    }

    #[test]
    fn wordpiece_pieces() {
        let v = vocab(&["obama", "##care", "bill", "care"]);
        assert_eq!(toks(&wordpiece_tokenize("Obamacare", &v)), ["obama", "##care"]);
        assert_eq!(toks(&wordpiece_tokenize("bill", &v)), ["bill"]);
        assert_eq!(toks(&wordpiece_tokenize("qqqq", &v)), [UNK]);
        // a partial match still yields a single [UNK] for the whole word
        assert_eq!(toks(&wordpiece_tokenize("billx care", &v)), [UNK, "care"]);
    }

    #[test]
    fn wordpiece_length_guard() {
        let v = vocab(&["a", "##a"]);
        assert_eq!(wordpiece_tokenize(&"a".repeat(100), &v).len(), 100);
        assert_eq!(toks(&wordpiece_tokenize(&"a".repeat(101), &v)), [UNK]);
    }

    #[test]
    fn vocab_requires_specials() {
        assert!(WordPieceVocab::from_tokens(vec!["[CLS]".into(), "[SEP]".into(), "[PAD]".into()]).is_err());
        assert!(WordPieceVocab::parse("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[SEP]\n").is_err());
        let v = WordPieceVocab::parse("[PAD]\n[UNK]\n[CLS]\n[SEP]\nhello\n").unwrap();
        assert_eq!((v.len(), v.id("hello"), v.cls_id), (5, Some(4), 2));
    }

    #[test]
    fn encode_truncates() {
        let v = vocab(&["w"]);
        let seq = TokenSequence::from(vec!["w".to_string(); 600]);
        let e = encode(&seq, &v, 512, None).unwrap();
        assert_eq!(e.len(), 512);
        assert_eq!(e.input_ids[0], v.cls_id);
        assert_eq!(e.input_ids[511], v.sep_id);
        assert_eq!(e.input_ids[1..511].iter().filter(|&&i| i == v.id("w").unwrap()).count(), 510);
    }

    #[test]
    fn encode_empty_and_padding() {
        let v = vocab(&["x"]);
        let e = encode(&TokenSequence::default(), &v, 8, None).unwrap();
        assert_eq!(e.input_ids, vec![v.cls_id, v.sep_id]);
        let three = TokenSequence::from(&["x", "x", "x"][..]);
        let p = encode(&three, &v, 8, Some(8)).unwrap();
        assert_eq!(p.attention_mask, vec![1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(p.input_ids[5..], [v.pad_id; 3]);
        assert!(encode(&three, &v, 2, None).is_err());
        assert!(encode(&three, &v, 8, Some(9)).is_err());
    }

    proptest! {
        #[test]
        fn ngram_unigram_identity(words in proptest::collection::vec("[a-z]{1,6}", 0..20)) {
            let seq = TokenSequence::from(words);
            prop_assert_eq!(ngrams(&seq, 1).unwrap(), seq);
        }

        #[test]
        fn wordpiece_round_trip(word in "[a-e]{1,12}") {
            let v = vocab(&["a", "b", "c", "ab", "##a", "##b", "##c", "##d", "##cd", "##abc"]);
            let pieces = wordpiece_tokenize(&word, &v);
            if !pieces.tokens.iter().any(|t| t == UNK) {
                let rebuilt: String = pieces.iter().map(|p| p.trim_start_matches("##")).collect();
                prop_assert_eq!(rebuilt, word.to_lowercase());
            }
        }

        #[test]
        fn encode_layout(n in 0usize..40, max_length in 3usize..32, pad in proptest::option::of(0usize..32)) {
            let v = vocab(&["x"]);
            let seq = TokenSequence::from(vec!["x".to_string(); n]);
            let pad = pad.map(|p| p.min(max_length));
            let e = encode(&seq, &v, max_length, pad).unwrap();
            prop_assert!(e.len() <= max_length);
            prop_assert_eq!(e.input_ids[0], v.cls_id);
            let active = e.active_len();
            prop_assert_eq!(e.input_ids[active - 1], v.sep_id);
            prop_assert_eq!(e.input_ids.iter().filter(|&&i| i == v.sep_id).count(), 1);
            prop_assert!(e.attention_mask[..active].iter().all(|&m| m == 1));
            prop_assert!(e.input_ids[active..].iter().all(|&i| i == v.pad_id));
            prop_assert_eq!(e.segment_ids.len(), e.len());
        }
    }
}
