//! Deliberately naive loop implementations used as independent references.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

use newslens::classifier::LinearHead;
use newslens::encoder::{EncoderWeights, MASK_BIAS};

pub type Matrix = Vec<Vec<f64>>;

// ---------------------------------------------------------------- symmetric eigensolver

/// Cyclic Jacobi rotations; eigenpairs sorted by descending eigenvalue, vectors as rows.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Matrix = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Sample covariance with `1/(N-1)`, by explicit double loops.
pub fn covariance(points: &[Vec<f64>]) -> Matrix {
    let n = points.len();
    let d = points[0].len();
    let mean: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
    let mut c = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            c[i][j] = points.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / (n - 1) as f64;
        }
    }
    c
}

// ---------------------------------------------------------------- tf-idf

pub struct TfidfOracle {
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub vectors: Matrix,
}

/// Stopword list read straight from the shipped data file.
pub fn shipped_stopwords() -> BTreeSet<String> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/english_stopwords.txt")).unwrap();
    text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
}

/// Analysis for whitespace-separated, punctuation-free text: lowercase, split, drop
/// stopwords, join adjacent pairs for bigrams.
pub fn analyze_plain(text: &str, ngram: usize, stop: Option<&BTreeSet<String>>) -> Vec<String> {
    let words: Vec<String> = text
        .split_whitespace()
        .map(str::to_lowercase)
        .filter(|w| stop.is_none_or(|s| !s.contains(w)))
        .collect();
    if ngram == 1 {
        return words;
    }
    let mut out = Vec::new();
    for i in 0..words.len().saturating_sub(1) {
        out.push(format!("{} {}", words[i], words[i + 1]));
    }
    out
}

/// Brute force: counts by scanning every document for every candidate term, top-`k`
/// selection by repeated arg-max, then sorted output order.
pub fn tfidf_oracle(fit_docs: &[Vec<String>], transform_docs: &[Vec<String>], k: usize) -> TfidfOracle {
    let candidates: BTreeSet<&String> = fit_docs.iter().flatten().collect();
    let mut pool: Vec<(String, usize, usize)> = candidates
        .into_iter()
        .map(|t| {
            let count = fit_docs.iter().map(|d| d.iter().filter(|w| *w == t).count()).sum();
            let df = fit_docs.iter().filter(|d| d.contains(t)).count();
            (t.clone(), count, df)
        })
        .collect();
    let mut chosen = Vec::new();
    while chosen.len() < k && !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            let better = pool[i].1 > pool[best].1 || (pool[i].1 == pool[best].1 && pool[i].0 < pool[best].0);
            if better {
                best = i;
            }
        }
        chosen.push(pool.remove(best));
    }
    chosen.sort_by(|a, b| a.0.cmp(&b.0));
    let n = fit_docs.len() as f64;
    let idf: Vec<f64> = chosen.iter().map(|c| ((1.0 + n) / (1.0 + c.2 as f64)).ln() + 1.0).collect();
    let vectors = transform_docs
        .iter()
        .map(|doc| {
            let raw: Vec<f64> = chosen
                .iter()
                .zip(&idf)
                .map(|(c, idf)| doc.iter().filter(|w| **w == c.0).count() as f64 * idf)
                .collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            raw.iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
        })
        .collect();
    TfidfOracle {
        terms: chosen.into_iter().map(|c| c.0).collect(),
        idf,
        vectors,
    }
}

// ---------------------------------------------------------------- classifier

/// Mean cross-entropy of a head over a batch, computed with the log-sum-exp identity.
pub fn mean_loss(w: &Matrix, b: &[f64], zs: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (z, &y) in zs.iter().zip(labels) {
        let logits: Vec<f64> = w.iter().zip(b).map(|(row, bc)| row.iter().zip(z).map(|(a, x)| a * x).sum::<f64>() + bc).collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - logits[y];
    }
    total / zs.len() as f64
}

pub fn head_to_rows(head: &LinearHead) -> (Matrix, Vec<f64>) {
    (
        head.weight.rows().into_iter().map(|r| r.to_vec()).collect(),
        head.bias.to_vec(),
    )
}

/// Central differences of [`mean_loss`] with step `h` for every weight and bias.
pub fn finite_difference_grad(head: &LinearHead, zs: &[Vec<f64>], labels: &[usize], h: f64) -> (Matrix, Vec<f64>) {
    let (w, b) = head_to_rows(head);
    let mut gw = vec![vec![0.0; w[0].len()]; w.len()];
    for c in 0..w.len() {
        for k in 0..w[0].len() {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus[c][k] += h;
            minus[c][k] -= h;
            gw[c][k] = (mean_loss(&plus, &b, zs, labels) - mean_loss(&minus, &b, zs, labels)) / (2.0 * h);
        }
    }
    let gb = (0..b.len())
        .map(|c| {
            let (mut plus, mut minus) = (b.clone(), b.clone());
            plus[c] += h;
            minus[c] -= h;
            (mean_loss(&w, &plus, zs, labels) - mean_loss(&w, &minus, zs, labels)) / (2.0 * h)
        })
        .collect();
    (gw, gb)
}

// ---------------------------------------------------------------- cam and correlation

/// `M_c(l) = Σ_k W[c][k] f[l][k]` by explicit double loop over all rows.
pub fn cam_direct(f: &Matrix, w: &Matrix, class: usize) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for l in 0..f.len() {
        for k in 0..f[l].len() {
            out[l] += w[class][k] * f[l][k];
        }
    }
    out
}

/// Textbook Pearson correlation from means and standard deviations.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n).sqrt();
    cov / (sx * sy)
}

// ---------------------------------------------------------------- encoder

fn to_rows(a: &ndarray::Array2<f64>) -> Matrix {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn affine(x: &Matrix, w: &ndarray::Array2<f64>, b: &ndarray::Array1<f64>) -> Matrix {
    // weight stored [out, in]
    x.iter()
        .map(|row| {
            (0..w.nrows())
                .map(|o| b[o] + (0..w.ncols()).map(|i| w[[o, i]] * row[i]).sum::<f64>())
                .collect()
        })
        .collect()
}

fn layer_norm(x: &Matrix, gamma: &ndarray::Array1<f64>, beta: &ndarray::Array1<f64>, eps: f64) -> Matrix {
    x.iter()
        .map(|row| {
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            row.iter()
                .enumerate()
                .map(|(k, v)| gamma[k] * (v - mean) / (var + eps).sqrt() + beta[k])
                .collect()
        })
        .collect()
}

fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub struct ReferenceOutput {
    pub hidden: Matrix,
    /// `probs[layer][head][query][key]`.
    pub probs: Vec<Vec<Matrix>>,
}

/// Scalar-loop forward pass over `ids` with segment 0 everywhere and key mask `mask`.
pub fn encoder_reference(w: &EncoderWeights, ids: &[u32], mask: &[bool]) -> ReferenceOutput {
    let cfg = &w.config;
    let (d, heads) = (cfg.hidden, cfg.num_heads);
    let dh = d / heads;
    let eps = cfg.layernorm_eps;
    let x: Matrix = ids
        .iter()
        .enumerate()
        .map(|(l, &id)| {
            (0..d)
                .map(|k| w.word_embedding[[id as usize, k]] + w.position_embedding[[l, k]] + w.segment_embedding[[0, k]])
                .collect()
        })
        .collect();
    let mut x = layer_norm(&x, &w.embedding_norm.gamma, &w.embedding_norm.beta, eps);
    let mut probs = Vec::new();
    for layer in &w.layers {
        let q = affine(&x, &layer.query.weight, &layer.query.bias);
        let k = affine(&x, &layer.key.weight, &layer.key.bias);
        let v = affine(&x, &layer.value.weight, &layer.value.bias);
        let n = x.len();
        let mut ctx = vec![vec![0.0; d]; n];
        let mut layer_probs = Vec::new();
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let mut p = vec![vec![0.0; n]; n];
            for i in 0..n {
                let scores: Vec<f64> = (0..n)
                    .map(|j| {
                        let dot: f64 = cols.clone().map(|c| q[i][c] * k[j][c]).sum();
                        dot / (dh as f64).sqrt() + if mask[j] { 0.0 } else { MASK_BIAS }
                    })
                    .collect();
                let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                let z: f64 = e.iter().sum();
                for j in 0..n {
                    p[i][j] = e[j] / z;
                }
                for c in cols.clone() {
                    ctx[i][c] = (0..n).map(|j| p[i][j] * v[j][c]).sum();
                }
            }
            layer_probs.push(p);
        }
        probs.push(layer_probs);
        let attended = layer_norm(
            &add(&x, &affine(&ctx, &layer.attn_out.weight, &layer.attn_out.bias)),
            &layer.attn_norm.gamma,
            &layer.attn_norm.beta,
            eps,
        );
        let inner: Matrix = affine(&attended, &layer.ffn_in.weight, &layer.ffn_in.bias)
            .into_iter()
            .map(|r| r.into_iter().map(|u| 0.5 * u * (1.0 + libm::erf(u / 2f64.sqrt()))).collect())
            .collect();
        x = layer_norm(
            &add(&attended, &affine(&inner, &layer.ffn_out.weight, &layer.ffn_out.bias)),
            &layer.ffn_norm.gamma,
            &layer.ffn_norm.beta,
            eps,
        );
    }
    ReferenceOutput { hidden: x, probs }
}

pub fn max_abs_diff(a: &Matrix, b: &ndarray::Array2<f64>) -> f64 {
    let b = to_rows(b);
    a.iter()
        .zip(&b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}
