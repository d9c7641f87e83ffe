use std::fs;
use std::path::Path;

use newslens::corpus::{Document, FAKE, REAL};
use newslens::encoder::{EncoderConfig, EncoderWeights};
use newslens::tokenize::WordPieceVocab;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FILLER: usize = 20;
pub const KEYWORDS: usize = 12;

pub fn filler(i: usize) -> String {
    format!("common{i}")
}

pub fn keyword(label: usize, i: usize) -> String {
    if label == FAKE {
        format!("hoax{i}")
    } else {
        format!("report{i}")
    }
}

/// Two classes with disjoint vocabularies. Each document has 24..40 words; about one in
/// ten is drawn from a small shared vocabulary, the rest from its class's own words.
pub fn two_vocabulary_corpus(per_class: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(2 * per_class);
    for label in [FAKE, REAL] {
        for _ in 0..per_class {
            let len = rng.random_range(24..40);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.9) {
                        keyword(label, rng.random_range(0..KEYWORDS))
                    } else {
                        filler(rng.random_range(0..FILLER))
                    }
                })
                .collect();
            docs.push(Document::new(words.join(" "), label));
        }
    }
    docs
}

pub fn toy_vocab_tokens() -> Vec<String> {
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", ".", ",", "the"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    tokens.extend((0..FILLER).map(filler));
    for label in [FAKE, REAL] {
        tokens.extend((0..KEYWORDS).map(|i| keyword(label, i)));
    }
    tokens.extend(["bill", "obama", "##care", "##s"].iter().map(|s| s.to_string()));
    tokens
}

pub fn toy_vocab() -> WordPieceVocab {
    WordPieceVocab::from_tokens(toy_vocab_tokens()).unwrap()
}

/// 2 layers, width 16, 2 heads.
pub fn toy_config(vocab_size: usize) -> EncoderConfig {
    EncoderConfig {
        num_layers: 2,
        hidden: 16,
        num_heads: 2,
        ffn_dim: 32,
        max_positions: 64,
        vocab_size,
        type_vocab_size: 2,
        layernorm_eps: 1e-12,
    }
}

pub fn toy_encoder(seed: u64) -> EncoderWeights {
    EncoderWeights::random(toy_config(toy_vocab_tokens().len()), seed).unwrap()
}

/// Writes `real.csv` (with a dateline on every row) and `fake.csv` in the Kaggle layout.
pub fn write_csvs(dir: &Path, docs: &[Document]) {
    for (label, name) in [(REAL, "real.csv"), (FAKE, "fake.csv")] {
        let mut w = csv::Writer::from_path(dir.join(name)).unwrap();
        w.write_record(["title", "text", "subject", "date"]).unwrap();
        for (i, d) in docs.iter().filter(|d| d.label == label).enumerate() {
            let text = if label == REAL {
                format!("WASHINGTON (Reuters) - {}", d.text)
            } else {
                d.text.clone()
            };
            w.write_record([format!("title {i}"), text, "news".into(), "2017".into()]).unwrap();
        }
        w.flush().unwrap();
    }
}

/// Vocabulary file and weight archive for the toy encoder.
pub fn write_toy_model(dir: &Path, seed: u64) {
    fs::write(dir.join("vocab.txt"), toy_vocab_tokens().join("\n") + "\n").unwrap();
    toy_encoder(seed).to_archive().write(dir.join("weights.bin")).unwrap();
}

pub fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).unwrap()
}
