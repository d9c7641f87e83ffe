//! Frozen CAM and correlation outputs for a fixed toy encoder, head and sentence.
//!
//! The golden file is produced by the scalar reference implementations, never by the code
//! under test; `cargo test --test golden -- --ignored` rewrites it.

mod common;

use std::fs;
use std::path::PathBuf;

use newslens::classifier::LinearHead;
use newslens::interpret::{cam, correlation_matrix};
use newslens::pipeline::EncoderBackend;
use serde::{Deserialize, Serialize};

use common::{fixtures, oracle};

const TEXT: &str = "The bill, obamacare hoax3 common7.";
const PIECES: [&str; 8] = ["the", "bill", ",", "obama", "##care", "hoax3", "common7", "."];
const CLASS: usize = 0;
const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
struct Golden {
    tokens: Vec<String>,
    cam: Vec<f64>,
    static_corr: Vec<Vec<f64>>,
    contextual_corr: Vec<Vec<f64>>,
}

fn path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_cam_corr.json")
}

fn head() -> LinearHead {
    LinearHead::init(2, 16, 11)
}

fn corr(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|a| rows.iter().map(|b| oracle::pearson(a, b)).collect()).collect()
}

fn reference() -> Golden {
    let weights = fixtures::toy_encoder(3);
    let vocab = fixtures::toy_vocab();
    let id = |t: &str| vocab.id(t).unwrap();
    let ids: Vec<u32> = std::iter::once(id("[CLS]"))
        .chain(PIECES.iter().map(|t| id(t)))
        .chain(std::iter::once(id("[SEP]")))
        .collect();
    let out = oracle::encoder_reference(&weights, &ids, &vec![true; ids.len()]);
    let content = &out.hidden[1..ids.len() - 1];
    let (w, _) = oracle::head_to_rows(&head());
    let static_rows: Vec<Vec<f64>> = PIECES
        .iter()
        .map(|t| weights.word_embedding.row(id(t) as usize).to_vec())
        .collect();
    Golden {
        tokens: PIECES.iter().map(|t| t.to_string()).collect(),
        cam: oracle::cam_direct(&content.to_vec(), &w, CLASS),
        static_corr: corr(&static_rows),
        contextual_corr: corr(content),
    }
}

fn assert_matrix(name: &str, got: &[Vec<f64>], want: &[Vec<f64>]) {
    assert_eq!(got.len(), want.len(), "{name}");
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        for (j, (a, b)) in g.iter().zip(w).enumerate() {
            assert!((a - b).abs() <= TOLERANCE, "{name}[{i}][{j}]: {a} vs {b}");
        }
    }
}

#[test]
#[ignore]
fn regenerate() {
    fs::write(path(), serde_json::to_string_pretty(&reference()).unwrap() + "\n").unwrap();
}

#[test]
fn reference_still_matches_golden() {
    let golden: Golden = serde_json::from_slice(&fs::read(path()).unwrap()).unwrap();
    let now = reference();
    assert_eq!(now.tokens, golden.tokens);
    assert_matrix("cam", &[now.cam], &[golden.cam]);
}

#[test]
fn library_matches_golden() {
    let golden: Golden = serde_json::from_slice(&fs::read(path()).unwrap()).unwrap();
    let backend = EncoderBackend::new(fixtures::toy_encoder(3), fixtures::toy_vocab(), 64).unwrap();

    let view = backend.token_view(TEXT).unwrap();
    let scores = cam(&view.matrix, &view.tokens, &head(), CLASS).unwrap();
    assert_eq!(scores.tokens.tokens, golden.tokens);
    assert_matrix("cam", &[scores.scores], std::slice::from_ref(&golden.cam));

    let content = view.matrix.rows.select(ndarray::Axis(0), &scores.positions);
    let contextual = correlation_matrix(&content, &golden.tokens).unwrap();
    assert_matrix("contextual", &contextual.entries, &golden.contextual_corr);

    let stat = backend.static_view(TEXT).unwrap();
    assert_eq!(stat.tokens.tokens, golden.tokens);
    let static_corr = correlation_matrix(&stat.matrix.rows, &golden.tokens).unwrap();
    assert_matrix("static", &static_corr.entries, &golden.static_corr);
}
