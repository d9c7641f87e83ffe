//! Static word-vector tables, per-token lookup and global average pooling.
//!
//! Text format: an optional header line `count dim`, then one `token v1 ... vD` line per
//! entry, whitespace separated, UTF-8. Duplicate tokens keep their first vector.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use ndarray::Array2;

use crate::error::{check_dim, Error, Result};
use crate::tokenize::TokenSequence;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Adds a vector unless the token is already present. Returns whether it was inserted.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f32>) -> Result<bool> {
        check_dim(self.dim, vector.len())?;
        let token = token.into();
        if self.vectors.contains_key(&token) {
            return Ok(false);
        }
        self.vectors.insert(token, vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_filtered(path, None)
    }

    /// Loads only the tokens in `keep` (every line is still shape-checked). Useful for
    /// multi-gigabyte tables where only a corpus vocabulary is needed.
    pub fn load_filtered(path: impl AsRef<Path>, keep: Option<&HashSet<String>>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), keep).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn read<R: BufRead>(reader: R, keep: Option<&HashSet<String>>) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut declared_count = None;
        let mut table = EmbeddingTable::new(0);
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Format(format!("line {line_no}: {e}")))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values: Vec<&str> = fields.collect();

            if i == 0 && values.len() == 1 {
                if let (Ok(count), Ok(d)) = (token.parse::<usize>(), values[0].parse::<usize>()) {
                    declared_count = Some(count);
                    dim = Some(d);
                    continue;
                }
            }
            let d = *dim.get_or_insert(values.len());
            if values.len() != d || d == 0 {
                return Err(Error::Format(format!(
                    "line {line_no}: expected {d} values, found {}",
                    values.len()
                )));
            }
            table.dim = d;
            if keep.is_some_and(|k| !k.contains(token)) || table.vectors.contains_key(token) {
                continue;
            }
            let vector = values
                .iter()
                .map(|v| v.parse::<f32>())
                .collect::<std::result::Result<Vec<f32>, _>>()
                .map_err(|e| Error::Format(format!("line {line_no}: {e}")))?;
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::Format(format!("line {line_no}: non-finite value")));
            }
            table.vectors.insert(token.to_string(), vector);
        }
        if let Some(d) = dim {
            table.dim = d;
        }
        if let (Some(count), None) = (declared_count, keep) {
            if count != table.len() {
                warn!("embedding header declares {count} entries, read {}", table.len());
            }
        }
        Ok(table)
    }

    /// Writes the table with a `count dim` header, entries in `order`.
    pub fn write(&self, path: impl AsRef<Path>, order: &[String]) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let present: Vec<&String> = order.iter().filter(|t| self.vectors.contains_key(*t)).collect();
        writeln!(out, "{} {}", present.len(), self.dim).map_err(io)?;
        for token in present {
            write!(out, "{token}").map_err(io)?;
            for x in &self.vectors[token] {
                write!(out, " {x}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// L rows of D-dimensional token vectors with a per-row inclusion mask.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenMatrix {
    pub rows: Array2<f64>,
    pub mask: Vec<bool>,
}

impl TokenMatrix {
    pub fn new(rows: Array2<f64>, mask: Vec<bool>) -> Result<Self> {
        check_dim(rows.nrows(), mask.len())?;
        Ok(Self { rows, mask })
    }

    /// All rows masked in.
    pub fn dense(rows: Array2<f64>) -> Self {
        let mask = vec![true; rows.nrows()];
        Self { rows, mask }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// The masked-in rows as a dense matrix.
    pub fn active_rows(&self) -> Array2<f64> {
        let idx: Vec<usize> = self.active_indices().collect();
        self.rows.select(ndarray::Axis(0), &idx)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedSequence {
    pub matrix: TokenMatrix,
    /// The in-vocabulary tokens, aligned with the matrix rows.
    pub tokens: TokenSequence,
    /// Out-of-vocabulary tokens that were skipped.
    pub skipped: usize,
}

/// One row per known token, in order; unknown tokens are skipped and counted.
pub fn embed_sequence(seq: &TokenSequence, table: &EmbeddingTable) -> EmbeddedSequence {
    let mut kept = Vec::new();
    let mut data = Vec::new();
    for tok in seq.iter() {
        if let Some(v) = table.get(tok) {
            kept.push(tok.to_string());
            data.extend(v.iter().map(|&x| f64::from(x)));
        }
    }
    let rows = Array2::from_shape_vec((kept.len(), table.dim()), data)
        .expect("row-major data matches shape");
    EmbeddedSequence {
        matrix: TokenMatrix::dense(rows),
        skipped: seq.len() - kept.len(),
        tokens: kept.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pooled {
    pub vector: Vec<f64>,
    /// Set when no row was masked in; `vector` is then all zeros.
    pub empty: bool,
}

/// Arithmetic mean over the masked-in rows.
pub fn gap_pool(m: &TokenMatrix) -> Pooled {
    let mut sum = vec![0.0; m.dim()];
    let mut count = 0usize;
    for i in m.active_indices() {
        for (s, x) in sum.iter_mut().zip(m.rows.row(i)) {
            *s += x;
        }
        count += 1;
    }
    if count == 0 {
        return Pooled {
            vector: sum,
            empty: true,
        };
    }
    let n = count as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Pooled {
        vector: sum,
        empty: false,
    }
}
