#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use newslens::classifier::{HeadFile, LinearHead, TrainConfig};
use newslens::encoder::{EncoderConfig, EncoderWeights};
use newslens::tfidf::{TfidfConfig, TfidfModel};

pub const VOCAB: [&str; 12] = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", ".", "the", "senate", "passed", "hoax", "shocking", "obama", "##care",
];
pub const DIM: usize = 8;

pub struct Model {
    pub weights: PathBuf,
    pub vocab: PathBuf,
    pub head: PathBuf,
    pub tfidf: PathBuf,
}

/// Tiny random encoder, vocabulary, trained-looking head and fitted TF-IDF model in `dir`.
pub fn write_model(dir: &Path) -> Model {
    let config = EncoderConfig {
        num_layers: 1,
        hidden: DIM,
        num_heads: 2,
        ffn_dim: 16,
        max_positions: 16,
        vocab_size: VOCAB.len(),
        type_vocab_size: 2,
        layernorm_eps: 1e-12,
    };
    let model = Model {
        weights: dir.join("weights.bin"),
        vocab: dir.join("vocab.txt"),
        head: dir.join("head.json"),
        tfidf: dir.join("tfidf.json"),
    };
    EncoderWeights::random(config, 4).unwrap().to_archive().write(&model.weights).unwrap();
    fs::write(&model.vocab, VOCAB.join("\n") + "\n").unwrap();
    HeadFile::new(&LinearHead::init(2, DIM, 1), Some(TrainConfig::default()), 1)
        .save(&model.head)
        .unwrap();
    let docs = ["the senate passed the bill", "shocking hoax about the senate", "obamacare passed"];
    TfidfModel::fit(docs, TfidfConfig::default()).unwrap().save(&model.tfidf).unwrap();
    model
}
