//! Labeled news corpora: CSV ingestion, dateline cleaning and seeded train/test splits.
//!
//! Labels are fixed for every report: fake = 0, real = 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FAKE: usize = 0;
pub const REAL: usize = 1;

const REUTERS_MARKER: &str = "(Reuters) -";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    pub label: usize,
}

impl Document {
    pub fn new(text: impl Into<String>, label: usize) -> Self {
        Self {
            text: text.into(),
            label,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Source file names, in ingestion order.
    pub provenance: Vec<String>,
    /// Rows dropped because their text was empty (at load or after cleaning).
    pub dropped: usize,
}

impl Corpus {
    pub fn from_documents(documents: Vec<Document>) -> Self {
        Self {
            documents,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.text.as_str())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.documents.iter().map(|d| d.label).collect()
    }

    /// Concatenates corpora in the given order.
    pub fn concat(parts: impl IntoIterator<Item = Corpus>) -> Self {
        let mut out = Corpus::default();
        for part in parts {
            out.documents.extend(part.documents);
            out.provenance.extend(part.provenance);
            out.dropped += part.dropped;
        }
        out
    }

    /// Applies [`clean_reuters_prefix`] to every document, dropping those left empty.
    pub fn clean_reuters(self) -> Self {
        let before = self.documents.len();
        let documents: Vec<Document> = self
            .documents
            .into_iter()
            .map(clean_reuters_prefix)
            .filter(|d| !d.text.trim().is_empty())
            .collect();
        let newly_dropped = before - documents.len();
        if newly_dropped > 0 {
            info!("dropped {newly_dropped} documents left empty by dateline cleaning");
        }
        Self {
            documents,
            provenance: self.provenance,
            dropped: self.dropped + newly_dropped,
        }
    }

    fn select(&self, indices: &[usize]) -> Self {
        Self {
            documents: indices.iter().map(|&i| self.documents[i].clone()).collect(),
            provenance: self.provenance.clone(),
            dropped: 0,
        }
    }
}

/// Reads an RFC-4180 CSV with a header row and a `text` column; every data row becomes a
/// document with `label`. Rows whose text is empty or whitespace are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, label: usize) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label, &path.display().to_string())
}

pub fn read_csv<R: std::io::Read>(reader: R, label: usize, source: &str) -> Result<Corpus> {
    if label > REAL {
        return Err(Error::InvalidArgument(format!("label must be 0 or 1, got {label}")));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("{source}: {e}")))?
        .clone();
    let text_col = headers
        .iter()
        .position(|h| h.trim_start_matches('\u{feff}').trim() == "text")
        .ok_or_else(|| Error::Format(format!("{source}: no \"text\" column in header")))?;

    let mut documents = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Format(format!("{source}: {e}")))?;
        let text = record.get(text_col).unwrap_or("");
        if text.trim().is_empty() {
            dropped += 1;
        } else {
            documents.push(Document::new(text, label));
        }
    }
    if dropped > 0 {
        info!("{source}: dropped {dropped} rows with empty text");
    }
    Ok(Corpus {
        documents,
        provenance: vec![source.to_string()],
        dropped,
    })
}

/// Removes the first `(Reuters) -` marker and everything before it, then trims leading
/// whitespace. Text without the marker is returned unchanged.
pub fn clean_reuters_prefix(doc: Document) -> Document {
    match doc.text.find(REUTERS_MARKER) {
        Some(pos) => {
            let rest = doc.text[pos + REUTERS_MARKER.len()..].trim_start();
            Document::new(rest, doc.label)
        }
        None => doc,
    }
}

#[derive(Clone, Debug)]
pub struct SplitCorpus {
    pub train: Corpus,
    pub test: Corpus,
    pub seed: u64,
    pub train_fraction: f64,
    /// Positions of the train documents in the source corpus.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded shuffle followed by a prefix/suffix cut; `|train| = round(train_fraction * N)`.
pub fn split(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<SplitCorpus> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 documents to split, got {n}"
        )));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "fraction {train_fraction} of {n} documents leaves one split empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train_idx, test_idx) = order.split_at(n_train);
    Ok(SplitCorpus {
        train: corpus.select(train_idx),
        test: corpus.select(test_idx),
        seed,
        train_fraction,
        train_indices: train_idx.to_vec(),
        test_indices: test_idx.to_vec(),
    })
}

pub fn class_counts(corpus: &Corpus) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for doc in &corpus.documents {
        *counts.entry(doc.label).or_insert(0) += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub label: usize,
    /// Whether the dateline cleaning rule was applied to this file.
    pub cleaned: bool,
    pub documents: usize,
    pub dropped: usize,
}

/// JSON description of a split, sufficient to rebuild it from the source CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_fraction: f64,
    pub label_names: BTreeMap<usize, String>,
    pub sources: Vec<SourceFile>,
    pub total: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitManifest {
    pub fn new(sources: Vec<SourceFile>, split: &SplitCorpus) -> Self {
        let label_names = BTreeMap::from([(FAKE, "fake".to_string()), (REAL, "real".to_string())]);
        Self {
            seed: split.seed,
            train_fraction: split.train_fraction,
            label_names,
            sources,
            total: split.train_indices.len() + split.test_indices.len(),
            train: split.train_indices.clone(),
            test: split.test_indices.clone(),
        }
    }

    /// Reloads the source files exactly as they were ingested and re-applies the split.
    pub fn load_split(&self) -> Result<SplitCorpus> {
        let mut parts = Vec::with_capacity(self.sources.len());
        for src in &self.sources {
            let mut part = load_csv(&src.path, src.label)?;
            if src.cleaned {
                part = part.clean_reuters();
            }
            if part.len() != src.documents {
                return Err(Error::Format(format!(
                    "{} now yields {} documents, manifest recorded {}",
                    src.path,
                    part.len(),
                    src.documents
                )));
            }
            parts.push(part);
        }
        let corpus = Corpus::concat(parts);
        self.apply(&corpus)
    }

    pub fn apply(&self, corpus: &Corpus) -> Result<SplitCorpus> {
        if corpus.len() != self.total {
            return Err(Error::Format(format!(
                "corpus has {} documents, manifest expects {}",
                corpus.len(),
                self.total
            )));
        }
        if let Some(&bad) = self.train.iter().chain(&self.test).find(|&&i| i >= self.total) {
            return Err(Error::Format(format!("split index {bad} out of range")));
        }
        Ok(SplitCorpus {
            train: corpus.select(&self.train),
            test: corpus.select(&self.test),
            seed: self.seed,
            train_fraction: self.train_fraction,
            train_indices: self.train.clone(),
            test_indices: self.test.clone(),
        })
    }
}
