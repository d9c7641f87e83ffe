//! Named float32 tensor archives.
//!
//! Layout: an 8-byte little-endian `u64` N, then N bytes of UTF-8 JSON mapping each tensor
//! name to `{"dtype": "f32", "shape": [...], "offset": o, "nbytes": n}`, then the data
//! region. Offsets are relative to the start of the data region; values are little-endian
//! IEEE-754 float32 in row-major order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub dtype: String,
    pub shape: Vec<usize>,
    pub offset: u64,
    pub nbytes: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::DimMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorArchive {
    tensors: BTreeMap<String, Tensor>,
}

impl TensorArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor> {
        self.tensors.remove(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (len_bytes, rest) = bytes
            .split_first_chunk::<8>()
            .ok_or_else(|| Error::Format("archive shorter than its 8-byte header".into()))?;
        let manifest_len = usize::try_from(u64::from_le_bytes(*len_bytes))
            .ok()
            .filter(|&n| n <= rest.len())
            .ok_or_else(|| Error::Format("manifest length exceeds archive size".into()))?;
        let (manifest_bytes, data) = rest.split_at(manifest_len);
        let manifest: BTreeMap<String, TensorEntry> = serde_json::from_slice(manifest_bytes)
            .map_err(|e| Error::Format(format!("archive manifest: {e}")))?;

        let mut tensors = BTreeMap::new();
        for (name, entry) in manifest {
            if entry.dtype != "f32" {
                return Err(Error::tensor(&name, format!("unsupported dtype {:?}", entry.dtype)));
            }
            let count: usize = entry.shape.iter().product();
            if entry.nbytes != 4 * count as u64 {
                return Err(Error::tensor(
                    &name,
                    format!("nbytes {} does not match shape {:?}", entry.nbytes, entry.shape),
                ));
            }
            let start = usize::try_from(entry.offset).unwrap_or(usize::MAX);
            let end = start.checked_add(entry.nbytes as usize).filter(|&e| e <= data.len());
            let end = end.ok_or_else(|| Error::tensor(&name, "data range outside the archive"))?;
            let values = data[start..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.insert(
                name,
                Tensor {
                    shape: entry.shape,
                    data: values,
                },
            );
        }
        Ok(Self { tensors })
    }

    /// Serializes tensors contiguously in name order.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut manifest = BTreeMap::new();
        let mut offset = 0u64;
        for (name, t) in &self.tensors {
            let nbytes = 4 * t.data.len() as u64;
            manifest.insert(
                name.clone(),
                TensorEntry {
                    dtype: "f32".into(),
                    shape: t.shape.clone(),
                    offset,
                    nbytes,
                },
            );
            offset += nbytes;
        }
        let header = serde_json::to_vec(&manifest)?;
        let mut out = Vec::with_capacity(8 + header.len() + offset as usize);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.tensors.values() {
            for x in &t.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }
}
