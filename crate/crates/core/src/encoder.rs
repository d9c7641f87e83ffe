//! Inference-only BERT-style transformer encoder.
//!
//! Weights come from a [`TensorArchive`] using the names below (`{i}` is the layer index,
//! linear weights are stored `[out, in]`):
//!
//! | name | shape |
//! |---|---|
//! | `embeddings.word_embeddings.weight` | `[vocab_size, hidden]` |
//! | `embeddings.position_embeddings.weight` | `[max_positions, hidden]` |
//! | `embeddings.token_type_embeddings.weight` | `[type_vocab_size, hidden]` |
//! | `embeddings.LayerNorm.{weight,bias}` | `[hidden]` |
//! | `encoder.layer.{i}.attention.self.{query,key,value}.weight` | `[hidden, hidden]` |
//! | `encoder.layer.{i}.attention.self.{query,key,value}.bias` | `[hidden]` |
//! | `encoder.layer.{i}.attention.output.dense.weight` / `.bias` | `[hidden, hidden]` / `[hidden]` |
//! | `encoder.layer.{i}.attention.output.LayerNorm.{weight,bias}` | `[hidden]` |
//! | `encoder.layer.{i}.intermediate.dense.weight` / `.bias` | `[ffn_dim, hidden]` / `[ffn_dim]` |
//! | `encoder.layer.{i}.output.dense.weight` / `.bias` | `[hidden, ffn_dim]` / `[hidden]` |
//! | `encoder.layer.{i}.output.LayerNorm.{weight,bias}` | `[hidden]` |
//!
//! Extra tensors (a pooler, for instance) are ignored.

use std::path::Path;

use log::debug;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{Tensor, TensorArchive};
use crate::error::{Error, Result};
use crate::static_embed::{EmbeddingTable, TokenMatrix};
use crate::tokenize::{EncodedSequence, WordPieceVocab};

/// Additive score for masked keys.
pub const MASK_BIAS: f64 = -1e9;

/// Contextualized token vectors; rows align with the encoded input positions.
pub type ContextualMatrix = TokenMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub hidden: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub max_positions: usize,
    pub vocab_size: usize,
    pub type_vocab_size: usize,
    pub layernorm_eps: f64,
}

impl Default for EncoderConfig {
    /// The 12-layer, 768-wide base geometry.
    fn default() -> Self {
        Self {
            num_layers: 12,
            hidden: 768,
            num_heads: 12,
            ffn_dim: 3072,
            max_positions: 512,
            vocab_size: 30522,
            type_vocab_size: 2,
            layernorm_eps: 1e-12,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden", self.hidden),
            ("num_heads", self.num_heads),
            ("ffn_dim", self.ffn_dim),
            ("max_positions", self.max_positions),
            ("vocab_size", self.vocab_size),
            ("type_vocab_size", self.type_vocab_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("encoder {name} must be positive")));
        }
        if !self.hidden.is_multiple_of(self.num_heads) {
            return Err(Error::InvalidArgument(format!(
                "hidden size {} is not divisible by {} heads",
                self.hidden, self.num_heads
            )));
        }
        // also rejects NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.layernorm_eps > 0.0) {
            return Err(Error::InvalidArgument("layernorm_eps must be positive".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.num_heads
    }

    /// Geometry read off the tensor shapes of an archive. The head count is not recoverable
    /// from shapes and must be supplied.
    pub fn infer(archive: &TensorArchive, num_heads: usize) -> Result<Self> {
        let shape = |name: &str| -> Result<Vec<usize>> {
            archive
                .get(name)
                .map(|t| t.shape.clone())
                .ok_or_else(|| Error::tensor(name, "missing from archive"))
        };
        let two = |name: &str| -> Result<(usize, usize)> {
            match shape(name)?.as_slice() {
                &[a, b] => Ok((a, b)),
                s => Err(Error::tensor(name, format!("expected a matrix, found shape {s:?}"))),
            }
        };
        let (vocab_size, hidden) = two("embeddings.word_embeddings.weight")?;
        let (max_positions, _) = two("embeddings.position_embeddings.weight")?;
        let (type_vocab_size, _) = two("embeddings.token_type_embeddings.weight")?;
        let num_layers = (0..)
            .take_while(|&i| archive.get(&layer_name(i, "attention.self.query.weight")).is_some())
            .count();
        let ffn_dim = if num_layers > 0 {
            two(&layer_name(0, "intermediate.dense.weight"))?.0
        } else {
            4 * hidden
        };
        let config = Self {
            num_layers,
            hidden,
            num_heads,
            ffn_dim,
            max_positions,
            vocab_size,
            type_vocab_size,
            layernorm_eps: 1e-12,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// `[out, in]`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerWeights {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub attn_out: Linear,
    pub attn_norm: LayerNorm,
    pub ffn_in: Linear,
    pub ffn_out: Linear,
    pub ffn_norm: LayerNorm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderWeights {
    pub config: EncoderConfig,
    pub word_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub segment_embedding: Array2<f64>,
    pub embedding_norm: LayerNorm,
    pub layers: Vec<LayerWeights>,
}

fn layer_name(i: usize, suffix: &str) -> String {
    format!("encoder.layer.{i}.{suffix}")
}

/// Every tensor name the encoder requires, with its expected shape.
pub fn tensor_schema(config: &EncoderConfig) -> Vec<(String, Vec<usize>)> {
    let (d, f) = (config.hidden, config.ffn_dim);
    let mut out = vec![
        ("embeddings.word_embeddings.weight".to_string(), vec![config.vocab_size, d]),
        ("embeddings.position_embeddings.weight".to_string(), vec![config.max_positions, d]),
        ("embeddings.token_type_embeddings.weight".to_string(), vec![config.type_vocab_size, d]),
        ("embeddings.LayerNorm.weight".to_string(), vec![d]),
        ("embeddings.LayerNorm.bias".to_string(), vec![d]),
    ];
    for i in 0..config.num_layers {
        for proj in ["query", "key", "value"] {
            out.push((layer_name(i, &format!("attention.self.{proj}.weight")), vec![d, d]));
            out.push((layer_name(i, &format!("attention.self.{proj}.bias")), vec![d]));
        }
        out.push((layer_name(i, "attention.output.dense.weight"), vec![d, d]));
        out.push((layer_name(i, "attention.output.dense.bias"), vec![d]));
        out.push((layer_name(i, "attention.output.LayerNorm.weight"), vec![d]));
        out.push((layer_name(i, "attention.output.LayerNorm.bias"), vec![d]));
        out.push((layer_name(i, "intermediate.dense.weight"), vec![f, d]));
        out.push((layer_name(i, "intermediate.dense.bias"), vec![f]));
        out.push((layer_name(i, "output.dense.weight"), vec![d, f]));
        out.push((layer_name(i, "output.dense.bias"), vec![d]));
        out.push((layer_name(i, "output.LayerNorm.weight"), vec![d]));
        out.push((layer_name(i, "output.LayerNorm.bias"), vec![d]));
    }
    out
}

struct Fetcher<'a> {
    archive: &'a TensorArchive,
}

impl Fetcher<'_> {
    fn raw(&self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let t = self
            .archive
            .get(name)
            .ok_or_else(|| Error::tensor(name, "missing from archive"))?;
        if t.shape != shape {
            return Err(Error::tensor(
                name,
                format!("shape {:?}, expected {:?}", t.shape, shape),
            ));
        }
        if let Some(pos) = t.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::tensor(name, format!("non-finite value at flat index {pos}")));
        }
        Ok(t.data.iter().map(|&x| f64::from(x)).collect())
    }

    fn matrix(&self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let data = self.raw(name, &[rows, cols])?;
        Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
    }

    fn vector(&self, name: &str, len: usize) -> Result<Array1<f64>> {
        Ok(Array1::from(self.raw(name, &[len])?))
    }

    fn linear(&self, prefix: &str, out: usize, inp: usize) -> Result<Linear> {
        Ok(Linear {
            weight: self.matrix(&format!("{prefix}.weight"), out, inp)?,
            bias: self.vector(&format!("{prefix}.bias"), out)?,
        })
    }

    fn norm(&self, prefix: &str, d: usize) -> Result<LayerNorm> {
        Ok(LayerNorm {
            gamma: self.vector(&format!("{prefix}.weight"), d)?,
            beta: self.vector(&format!("{prefix}.bias"), d)?,
        })
    }
}

fn to_tensor_2d(a: &Array2<f64>) -> Tensor {
    Tensor {
        shape: a.shape().to_vec(),
        data: a.iter().map(|&x| x as f32).collect(),
    }
}

fn to_tensor_1d(a: &Array1<f64>) -> Tensor {
    Tensor {
        shape: vec![a.len()],
        data: a.iter().map(|&x| x as f32).collect(),
    }
}

impl EncoderWeights {
    pub fn load(path: impl AsRef<Path>, config: EncoderConfig) -> Result<Self> {
        Self::from_archive(&TensorArchive::read(path)?, config)
    }

    pub fn from_archive(archive: &TensorArchive, config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let (d, f) = (config.hidden, config.ffn_dim);
        let get = Fetcher { archive };
        let layers = (0..config.num_layers)
            .map(|i| {
                let p = |s: &str| layer_name(i, s);
                Ok(LayerWeights {
                    query: get.linear(&p("attention.self.query"), d, d)?,
                    key: get.linear(&p("attention.self.key"), d, d)?,
                    value: get.linear(&p("attention.self.value"), d, d)?,
                    attn_out: get.linear(&p("attention.output.dense"), d, d)?,
                    attn_norm: get.norm(&p("attention.output.LayerNorm"), d)?,
                    ffn_in: get.linear(&p("intermediate.dense"), f, d)?,
                    ffn_out: get.linear(&p("output.dense"), d, f)?,
                    ffn_norm: get.norm(&p("output.LayerNorm"), d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = Self {
            config,
            word_embedding: get.matrix("embeddings.word_embeddings.weight", config.vocab_size, d)?,
            position_embedding: get.matrix(
                "embeddings.position_embeddings.weight",
                config.max_positions,
                d,
            )?,
            segment_embedding: get.matrix(
                "embeddings.token_type_embeddings.weight",
                config.type_vocab_size,
                d,
            )?,
            embedding_norm: get.norm("embeddings.LayerNorm", d)?,
            layers,
        };
        let known = tensor_schema(&config).len();
        if archive.len() > known {
            debug!("ignoring {} unused tensors in archive", archive.len() - known);
        }
        Ok(weights)
    }

    pub fn to_archive(&self) -> TensorArchive {
        let mut a = TensorArchive::new();
        a.insert("embeddings.word_embeddings.weight", to_tensor_2d(&self.word_embedding));
        a.insert("embeddings.position_embeddings.weight", to_tensor_2d(&self.position_embedding));
        a.insert("embeddings.token_type_embeddings.weight", to_tensor_2d(&self.segment_embedding));
        a.insert("embeddings.LayerNorm.weight", to_tensor_1d(&self.embedding_norm.gamma));
        a.insert("embeddings.LayerNorm.bias", to_tensor_1d(&self.embedding_norm.beta));
        for (i, l) in self.layers.iter().enumerate() {
            let mut lin = |prefix: &str, lin: &Linear| {
                a.insert(layer_name(i, &format!("{prefix}.weight")), to_tensor_2d(&lin.weight));
                a.insert(layer_name(i, &format!("{prefix}.bias")), to_tensor_1d(&lin.bias));
            };
            lin("attention.self.query", &l.query);
            lin("attention.self.key", &l.key);
            lin("attention.self.value", &l.value);
            lin("attention.output.dense", &l.attn_out);
            lin("intermediate.dense", &l.ffn_in);
            lin("output.dense", &l.ffn_out);
            for (prefix, n) in [("attention.output.LayerNorm", &l.attn_norm), ("output.LayerNorm", &l.ffn_norm)] {
                a.insert(layer_name(i, &format!("{prefix}.weight")), to_tensor_1d(&n.gamma));
                a.insert(layer_name(i, &format!("{prefix}.bias")), to_tensor_1d(&n.beta));
            }
        }
        a
    }

    /// Seeded random weights, values exactly representable in f32 so an archive round trip
    /// is lossless. Meant for toy encoders in tests and smoke runs.
    pub fn random(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, f) = (config.hidden, config.ffn_dim);
        let mut uniform = |shape: (usize, usize), scale: f64, center: f64| {
            Array2::from_shape_fn(shape, |_| {
                f64::from((center + scale * rng.random_range(-1.0..1.0)) as f32)
            })
        };
        let mut linear = |out: usize, inp: usize| Linear {
            weight: uniform((out, inp), 1.0 / (inp as f64).sqrt(), 0.0),
            bias: uniform((1, out), 0.1, 0.0).row(0).to_owned(),
        };
        let layers: Vec<(Linear, Linear, Linear, Linear, Linear, Linear)> = (0..config.num_layers)
            .map(|_| (linear(d, d), linear(d, d), linear(d, d), linear(d, d), linear(f, d), linear(d, f)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut norm = || {
            let mut v = |center: f64| {
                Array1::from_shape_fn(d, |_| f64::from((center + 0.1 * rng.random_range(-1.0..1.0)) as f32))
            };
            LayerNorm {
                gamma: v(1.0),
                beta: v(0.0),
            }
        };
        let layers = layers
            .into_iter()
            .map(|(query, key, value, attn_out, ffn_in, ffn_out)| LayerWeights {
                query,
                key,
                value,
                attn_out,
                attn_norm: norm(),
                ffn_in,
                ffn_out,
                ffn_norm: norm(),
            })
            .collect();
        let embedding_norm = norm();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe111);
        let mut table = |rows: usize| {
            Array2::from_shape_fn((rows, d), |_| f64::from(rng.random_range(-1.0f32..1.0)))
        };
        Ok(Self {
            config,
            word_embedding: table(config.vocab_size),
            position_embedding: table(config.max_positions),
            segment_embedding: table(config.type_vocab_size),
            embedding_norm,
            layers,
        })
    }

    /// The word-embedding rows as a static table keyed by vocabulary tokens.
    pub fn word_embedding_table(&self, vocab: &WordPieceVocab) -> Result<EmbeddingTable> {
        if vocab.len() > self.config.vocab_size {
            return Err(Error::DimMismatch {
                expected: self.config.vocab_size,
                actual: vocab.len(),
            });
        }
        let mut table = EmbeddingTable::new(self.config.hidden);
        for (id, token) in vocab.tokens().iter().enumerate() {
            let row = self.word_embedding.row(id).iter().map(|&x| x as f32).collect();
            table.insert(token.clone(), row)?;
        }
        Ok(table)
    }
}

/// Per-row standardization `(x - mean) / sqrt(var + eps)` with population variance.
pub fn normalize_rows(x: &Array2<f64>, eps: f64) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv = 1.0 / (var + eps).sqrt();
        row.mapv_inplace(|v| (v - mean) * inv);
    }
    out
}

fn layer_norm(x: &Array2<f64>, norm: &LayerNorm, eps: f64) -> Array2<f64> {
    normalize_rows(x, eps) * &norm.gamma + &norm.beta
}

/// Exact GELU, `0.5 x (1 + erf(x / sqrt 2))`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn softmax_in_place(mut row: ndarray::ArrayViewMut1<f64>, key_bias: ArrayView1<f64>) {
    row += &key_bias;
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    row /= sum;
}

/// Word + position + segment embedding, then layer normalization.
pub fn embed(ids: &EncodedSequence, w: &EncoderWeights) -> Result<ContextualMatrix> {
    let cfg = &w.config;
    let len = ids.len();
    if len > cfg.max_positions {
        return Err(Error::InvalidArgument(format!(
            "sequence length {len} exceeds {} positions",
            cfg.max_positions
        )));
    }
    if ids.segment_ids.len() != len || ids.attention_mask.len() != len {
        return Err(Error::InvalidArgument("encoded sequence fields differ in length".into()));
    }
    let mut x = Array2::zeros((len, cfg.hidden));
    for (l, mut row) in x.rows_mut().into_iter().enumerate() {
        let id = ids.input_ids[l] as usize;
        if id >= cfg.vocab_size {
            return Err(Error::InvalidArgument(format!(
                "token id {id} outside vocabulary of {}",
                cfg.vocab_size
            )));
        }
        let seg = ids.segment_ids[l] as usize;
        if seg >= cfg.type_vocab_size {
            return Err(Error::InvalidArgument(format!("segment id {seg} out of range")));
        }
        row.assign(&w.word_embedding.row(id));
        row += &w.position_embedding.row(l);
        row += &w.segment_embedding.row(seg);
    }
    let rows = layer_norm(&x, &w.embedding_norm, cfg.layernorm_eps);
    TokenMatrix::new(rows, ids.attention_mask.iter().map(|&m| m == 1).collect())
}

/// One encoder block: multi-head self-attention over masked-in keys, residual and layer
/// norm, then a GELU feed-forward network, residual and layer norm.
pub fn attention_layer(x: &ContextualMatrix, layer: &LayerWeights, config: &EncoderConfig) -> ContextualMatrix {
    attention_layer_traced(x, layer, config).0
}

/// As [`attention_layer`], also returning each head's `L x L` attention probabilities.
pub fn attention_layer_traced(
    x: &ContextualMatrix,
    layer: &LayerWeights,
    config: &EncoderConfig,
) -> (ContextualMatrix, Vec<Array2<f64>>) {
    let dh = config.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let q = layer.query.apply(&x.rows);
    let k = layer.key.apply(&x.rows);
    let v = layer.value.apply(&x.rows);
    let key_bias = Array1::from_iter(x.mask.iter().map(|&m| if m { 0.0 } else { MASK_BIAS }));

    let mut context = Array2::zeros(x.rows.raw_dim());
    let mut probs = Vec::with_capacity(config.num_heads);
    for h in 0..config.num_heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        for row in scores.axis_iter_mut(Axis(0)) {
            softmax_in_place(row, key_bias.view());
        }
        context.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
        probs.push(scores);
    }

    let eps = config.layernorm_eps;
    let attended = layer_norm(&(&x.rows + &layer.attn_out.apply(&context)), &layer.attn_norm, eps);
    let hidden = layer.ffn_in.apply(&attended).mapv_into(gelu);
    let out = layer_norm(&(&attended + &layer.ffn_out.apply(&hidden)), &layer.ffn_norm, eps);
    (
        TokenMatrix {
            rows: out,
            mask: x.mask.clone(),
        },
        probs,
    )
}

/// Embedding followed by every encoder block.
pub fn forward(ids: &EncodedSequence, w: &EncoderWeights) -> Result<ContextualMatrix> {
    let mut x = embed(ids, w)?;
    for layer in &w.layers {
        x = attention_layer(&x, layer, &w.config);
    }
    Ok(x)
}

/// Masks in only content positions: attended and not `[CLS]`, `[SEP]` or `[PAD]`.
pub fn content_mask(ids: &EncodedSequence, vocab: &WordPieceVocab) -> Vec<bool> {
    ids.input_ids
        .iter()
        .zip(&ids.attention_mask)
        .map(|(&id, &m)| m == 1 && !vocab.is_special(id))
        .collect()
}
