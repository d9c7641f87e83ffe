//! Two-component PCA through power iteration with deflation.

use log::warn;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Successive unit vectors closer than this count as converged.
pub const POWER_TOLERANCE: f64 = 1e-10;
pub const MAX_POWER_ITERATIONS: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Two orthonormal rows, the first two principal directions.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues of the components, descending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn unit(mut v: Array1<f64>) -> Option<Array1<f64>> {
    let n = v.dot(&v).sqrt();
    if n > 0.0 && n.is_finite() {
        v /= n;
        Some(v)
    } else {
        None
    }
}

fn orthogonalize(v: &mut Array1<f64>, basis: &[Array1<f64>]) {
    for b in basis {
        let p = v.dot(b);
        v.scaled_add(-p, b);
    }
}

/// A unit vector orthogonal to `basis`, built from the standard basis.
fn orthogonal_complement(dim: usize, basis: &[Array1<f64>]) -> Array1<f64> {
    (0..dim)
        .filter_map(|i| {
            let mut e = Array1::zeros(dim);
            e[i] = 1.0;
            orthogonalize(&mut e, basis);
            orthogonalize(&mut e, basis);
            let n = e.dot(&e).sqrt();
            (n > 1e-6).then(|| e / n)
        })
        .next()
        .expect("basis smaller than the space")
}

/// Leading `k` eigenpairs of a symmetric positive semi-definite matrix. Each pair comes
/// from power iteration on the matrix deflated by the pairs before it; iterates are kept
/// orthogonal to the earlier vectors.
pub fn top_eigenpairs(matrix: &Array2<f64>, k: usize) -> Vec<EigenPair> {
    let dim = matrix.nrows();
    assert!(k <= dim && matrix.ncols() == dim, "need a square matrix with at least k rows");
    let scale = matrix.diag().iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(0x9ca);
    let mut deflated = matrix.clone();
    let mut found: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut pairs = Vec::with_capacity(k);

    for _ in 0..k {
        let mut start = Array1::from_shape_fn(dim, |_| rng.random_range(-1.0..1.0));
        orthogonalize(&mut start, &found);
        let mut v = unit(start).unwrap_or_else(|| orthogonal_complement(dim, &found));
        let mut converged = false;
        let mut iterations = 0;
        while iterations < MAX_POWER_ITERATIONS {
            iterations += 1;
            let mut w = deflated.dot(&v);
            orthogonalize(&mut w, &found);
            // a numerically null remainder: any orthogonal direction is an eigenvector
            if w.dot(&w).sqrt() <= 1e-14 * scale {
                if iterations == 1 {
                    v = orthogonal_complement(dim, &found);
                }
                converged = true;
                break;
            }
            let mut next = unit(w).expect("non-zero vector");
            if next.dot(&v) < 0.0 {
                next.mapv_inplace(|x| -x);
            }
            let diff = (&next - &v).mapv(|x| x * x).sum().sqrt();
            v = next;
            if diff <= POWER_TOLERANCE {
                converged = true;
                break;
            }
        }
        if !converged {
            warn!("power iteration stopped after {iterations} iterations without converging");
        }
        let value = v.dot(&matrix.dot(&v));
        let outer = v
            .view()
            .insert_axis(ndarray::Axis(1))
            .dot(&v.view().insert_axis(ndarray::Axis(0)));
        deflated.scaled_add(-value, &outer);
        found.push(v.clone());
        pairs.push(EigenPair {
            value,
            vector: v,
            iterations,
            converged,
        });
    }
    pairs
}

/// Flips `v` so its largest-magnitude entry (the first, on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let idx = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
        .0;
    if v.get(idx).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Mean and sample covariance (`1 / (N - 1)`) of the rows.
pub fn covariance(data: &[Vec<f64>]) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = data.len();
    let dim = data.first().map_or(0, Vec::len);
    let mut x = Array2::zeros((n, dim));
    for (mut row, v) in x.rows_mut().into_iter().zip(data) {
        check_dim(dim, v.len())?;
        row.assign(&ndarray::ArrayView1::from(v.as_slice()));
    }
    let mean = x.mean_axis(ndarray::Axis(0)).unwrap_or_else(|| Array1::zeros(dim));
    x -= &mean;
    let cov = x.t().dot(&x) / (n.max(2) - 1) as f64;
    Ok((mean, cov))
}

pub fn pca_fit(data: &[Vec<f64>]) -> Result<PcaModel> {
    if data.len() < 3 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 3 vectors, got {}", data.len())));
    }
    let (mean, cov) = covariance(data)?;
    if cov.nrows() < 2 {
        return Err(Error::InvalidArgument("PCA needs at least 2 dimensions".into()));
    }
    if cov.diag().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("all vectors are identical; no principal directions".into()));
    }
    let pairs = top_eigenpairs(&cov, 2);
    let components = pairs
        .iter()
        .map(|p| {
            let mut c = p.vector.to_vec();
            canonical_sign(&mut c);
            c
        })
        .collect();
    Ok(PcaModel {
        mean: mean.to_vec(),
        components,
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
    })
}

pub fn pca_project(model: &PcaModel, z: &[f64]) -> Result<[f64; 2]> {
    check_dim(model.mean.len(), z.len())?;
    let mut out = [0.0; 2];
    for (o, c) in out.iter_mut().zip(&model.components) {
        *o = c.iter().zip(z.iter().zip(&model.mean)).map(|(c, (z, m))| c * (z - m)).sum();
    }
    Ok(out)
}

/// CSV rows `pc1,pc2,label` with a header.
pub fn projections_csv(points: &[[f64; 2]], labels: &[usize]) -> Result<String> {
    check_dim(points.len(), labels.len())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["pc1", "pc2", "label"]).map_err(csv_err)?;
    for (p, l) in points.iter().zip(labels) {
        w.write_record([p[0].to_string(), p[1].to_string(), l.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of ASCII numbers"))
}
