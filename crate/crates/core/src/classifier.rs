//! Linear classification head trained on frozen representations with cross-entropy,
//! AdamW and cosine learning-rate decay, plus the linear-evaluation protocol.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub const NUM_CLASSES: usize = 2;

/// Logits `y = W z + b` with `W: C x D`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearHead {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearHead {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weight: Array2::zeros((classes, dim)),
            bias: Array1::zeros(classes),
        }
    }

    /// Weights uniform in `±1/sqrt(D)`, bias zero.
    pub fn init(classes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (dim.max(1) as f64).sqrt();
        Self {
            weight: Array2::from_shape_fn((classes, dim), |_| rng.random_range(-bound..bound)),
            bias: Array1::zeros(classes),
        }
    }

    pub fn dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn classes(&self) -> usize {
        self.weight.nrows()
    }

    pub fn logits(&self, z: &[f64]) -> Result<Vec<f64>> {
        logits(self, z)
    }

    pub fn predict(&self, z: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(z)?))
    }
}

pub fn logits(head: &LinearHead, z: &[f64]) -> Result<Vec<f64>> {
    check_dim(head.dim(), z.len())?;
    Ok(head
        .weight
        .rows()
        .into_iter()
        .zip(&head.bias)
        .map(|(w, b)| w.iter().zip(z).map(|(w, z)| w * z).sum::<f64>() + b)
        .collect())
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(y: &[f64]) -> usize {
    y.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

pub fn softmax(y: &[f64]) -> Vec<f64> {
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = y.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(y)[label]`, evaluated as `logsumexp(y) - y[label]`.
pub fn cross_entropy(y: &[f64], label: usize) -> f64 {
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + y.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - y[label]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

fn check_batch(head: &LinearHead, zs: &[&[f64]], labels: &[usize]) -> Result<()> {
    if zs.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    check_dim(zs.len(), labels.len())?;
    if let Some(&bad) = labels.iter().find(|&&l| l >= head.classes()) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range")));
    }
    Ok(())
}

/// Mean cross-entropy over the batch.
pub fn batch_loss(head: &LinearHead, zs: &[&[f64]], labels: &[usize]) -> Result<f64> {
    check_batch(head, zs, labels)?;
    let mut total = 0.0;
    for (z, &label) in zs.iter().zip(labels) {
        total += cross_entropy(&logits(head, z)?, label);
    }
    Ok(total / zs.len() as f64)
}

/// Gradient of [`batch_loss`]: the batch mean of `(softmax(y) - onehot) ⊗ z` for `W` and
/// of `softmax(y) - onehot` for `b`.
pub fn grad(head: &LinearHead, zs: &[&[f64]], labels: &[usize]) -> Result<Gradients> {
    check_batch(head, zs, labels)?;
    let mut gw = Array2::zeros(head.weight.raw_dim());
    let mut gb = Array1::zeros(head.classes());
    for (z, &label) in zs.iter().zip(labels) {
        let mut delta = softmax(&logits(head, z)?);
        delta[label] -= 1.0;
        for (c, d) in delta.iter().enumerate() {
            gb[c] += d;
            for (g, x) in gw.row_mut(c).iter_mut().zip(z.iter()) {
                *g += d * x;
            }
        }
    }
    let n = zs.len() as f64;
    Ok(Gradients {
        weight: gw / n,
        bias: gb / n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            batch_size: 128,
            weight_decay: 0.1,
            epochs: 1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    // negated comparisons so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument(
                "lr, batch_size and epochs must all be positive".into(),
            ));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument("weight decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates for every head parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m_weight: Array2<f64>,
    pub v_weight: Array2<f64>,
    pub m_bias: Array1<f64>,
    pub v_bias: Array1<f64>,
}

impl AdamState {
    pub fn new(head: &LinearHead) -> Self {
        Self {
            m_weight: Array2::zeros(head.weight.raw_dim()),
            v_weight: Array2::zeros(head.weight.raw_dim()),
            m_bias: Array1::zeros(head.classes()),
            v_bias: Array1::zeros(head.classes()),
        }
    }
}

/// One AdamW update at step `t >= 1`. The decoupled decay `θ ← θ - lr·λ·θ` is applied to
/// `W` only, after the moment-based update.
pub fn adamw_step(
    head: &mut LinearHead,
    grads: &Gradients,
    state: &mut AdamState,
    t: usize,
    lr: f64,
    config: &TrainConfig,
) {
    assert!(t >= 1, "AdamW steps are numbered from 1");
    let (b1, b2) = (config.beta1, config.beta2);
    let bc1 = 1.0 - b1.powi(t as i32);
    let bc2 = 1.0 - b2.powi(t as i32);
    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + config.eps);
    };
    ndarray::Zip::from(&mut head.weight)
        .and(&grads.weight)
        .and(&mut state.m_weight)
        .and(&mut state.v_weight)
        .for_each(|p, &g, m, v| update(p, g, m, v));
    ndarray::Zip::from(&mut head.bias)
        .and(&grads.bias)
        .and(&mut state.m_bias)
        .and(&mut state.v_bias)
        .for_each(|p, &g, m, v| update(p, g, m, v));
    if config.weight_decay != 0.0 {
        let shrink = 1.0 - lr * config.weight_decay;
        head.weight.mapv_inplace(|w| w * shrink);
    }
}

/// `0.5 · base_lr · (1 + cos(π t / T))` for `0 <= t <= T`.
pub fn cosine_lr(step: usize, total_steps: usize, base_lr: f64) -> f64 {
    assert!(total_steps >= 1 && step <= total_steps, "cosine schedule needs 0 <= t <= T, T >= 1");
    0.5 * base_lr * (1.0 + (std::f64::consts::PI * step as f64 / total_steps as f64).cos())
}

/// Pooled representations with their class labels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        check_dim(features.len(), labels.len())?;
        if let Some(first) = features.first() {
            let d = first.len();
            if let Some(bad) = features.iter().find(|f| f.len() != d) {
                return Err(Error::DimMismatch {
                    expected: d,
                    actual: bad.len(),
                });
            }
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss before the first update.
    pub initial_loss: f64,
    /// Mean training loss over the full set after each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

fn full_loss(head: &LinearHead, data: &LabeledSet) -> Result<f64> {
    let zs: Vec<&[f64]> = data.features.iter().map(Vec::as_slice).collect();
    batch_loss(head, &zs, &data.labels)
}

/// Mini-batch training of `head` in place. Batches follow a seeded per-epoch shuffle, the
/// last partial batch is kept, and the cosine schedule spans `epochs · ceil(N / batch)`
/// steps (step `t` uses the rate at `t - 1`).
pub fn train(head: &mut LinearHead, data: &LabeledSet, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    check_dim(head.dim(), data.dim())?;
    let n = data.len();
    let per_epoch = n.div_ceil(config.batch_size);
    let total = config.epochs * per_epoch;
    let mut state = AdamState::new(head);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..n).collect();
    let initial_loss = full_loss(head, data)?;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut t = 0;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let zs: Vec<&[f64]> = batch.iter().map(|&i| data.features[i].as_slice()).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            let g = grad(head, &zs, &labels)?;
            let lr = cosine_lr(t, total, config.lr);
            t += 1;
            adamw_step(head, &g, &mut state, t, lr, config);
        }
        epoch_losses.push(full_loss(head, data)?);
    }
    Ok(TrainReport {
        initial_loss,
        epoch_losses,
        steps: t,
    })
}

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_dim(labels.len(), preds.len())?;
    if labels.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty set".into()));
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub test_accuracy: f64,
    /// Indexed by class; 0 when the class was never predicted.
    pub precision: Vec<f64>,
    /// Indexed by class; 0 when the class never occurs.
    pub recall: Vec<f64>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(head: &LinearHead, data: &LabeledSet) -> Result<Metrics> {
    let preds = data
        .features
        .iter()
        .map(|z| head.predict(z))
        .collect::<Result<Vec<_>>>()?;
    let c = head.classes();
    let mut confusion = vec![vec![0usize; c]; c];
    for (&p, &l) in preds.iter().zip(&data.labels) {
        confusion[l][p] += 1;
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = (0..c)
        .map(|k| ratio(confusion[k][k], (0..c).map(|r| confusion[r][k]).sum()))
        .collect();
    let recall = (0..c)
        .map(|k| ratio(confusion[k][k], confusion[k].iter().sum()))
        .collect();
    Ok(Metrics {
        test_accuracy: accuracy(&preds, &data.labels)?,
        precision,
        recall,
        confusion,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub weight_decays: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            weight_decays: vec![0.1, 0.001, 0.00001],
            epochs: vec![1, 2],
        }
    }
}

/// How the reported grid point is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Best test accuracy across the grid.
    Test,
    /// Best accuracy on a seeded hold-out of the training set; test accuracy is reported.
    Validation { fraction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub weight_decay: f64,
    pub epochs: usize,
    pub validation_accuracy: Option<f64>,
    pub metrics: Metrics,
    pub training: TrainReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearEvaluation {
    pub points: Vec<GridPoint>,
    pub best: usize,
    pub best_head: LinearHead,
    pub selection: Selection,
}

impl LinearEvaluation {
    pub fn best_point(&self) -> &GridPoint {
        &self.points[self.best]
    }
}

/// Trains a freshly initialized head for every `(weight_decay, epochs)` grid point and
/// reports test metrics for each, selecting one according to `selection`.
pub fn linear_evaluate(
    train_set: &LabeledSet,
    test_set: &LabeledSet,
    grid: &Grid,
    base: &TrainConfig,
    selection: Selection,
) -> Result<LinearEvaluation> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::InvalidArgument("linear evaluation needs non-empty train and test sets".into()));
    }
    if grid.weight_decays.is_empty() || grid.epochs.is_empty() {
        return Err(Error::InvalidArgument("empty hyper-parameter grid".into()));
    }
    check_dim(train_set.dim(), test_set.dim())?;

    let (fit_set, val_set) = match selection {
        Selection::Test => (train_set.clone(), None),
        Selection::Validation { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::InvalidArgument(format!("validation fraction {fraction} not in (0, 1)")));
            }
            let mut order: Vec<usize> = (0..train_set.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(base.seed ^ 0x7a11_da7e));
            let n_val = ((fraction * train_set.len() as f64).round() as usize).clamp(1, train_set.len() - 1);
            let (val_idx, fit_idx) = order.split_at(n_val);
            (train_set.subset(fit_idx), Some(train_set.subset(val_idx)))
        }
    };

    let configs: Vec<TrainConfig> = grid
        .weight_decays
        .iter()
        .flat_map(|&wd| {
            grid.epochs.iter().map(move |&epochs| TrainConfig {
                weight_decay: wd,
                epochs,
                ..*base
            })
        })
        .collect();
    let classes = NUM_CLASSES.max(train_set.labels.iter().max().map_or(0, |m| m + 1));
    let results = configs
        .par_iter()
        .map(|cfg| {
            let mut head = LinearHead::init(classes, train_set.dim(), cfg.seed);
            let training = train(&mut head, &fit_set, cfg)?;
            let metrics = evaluate(&head, test_set)?;
            let validation_accuracy = match &val_set {
                Some(v) => Some(evaluate(&head, v)?.test_accuracy),
                None => None,
            };
            Ok((
                GridPoint {
                    weight_decay: cfg.weight_decay,
                    epochs: cfg.epochs,
                    validation_accuracy,
                    metrics,
                    training,
                },
                head,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let score = |p: &GridPoint| p.validation_accuracy.unwrap_or(p.metrics.test_accuracy);
    let mut best = 0;
    for (i, (p, _)) in results.iter().enumerate() {
        if score(p) > score(&results[best].0) {
            best = i;
        }
    }
    let best_head = results[best].1.clone();
    Ok(LinearEvaluation {
        points: results.into_iter().map(|(p, _)| p).collect(),
        best,
        best_head,
        selection,
    })
}

/// On-disk form of a trained head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadFile {
    #[serde(rename = "W")]
    pub weight: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub dim: usize,
    pub classes: usize,
    /// Absent for a head that was never trained.
    pub config: Option<TrainConfig>,
    pub seed: u64,
}

impl HeadFile {
    pub fn new(head: &LinearHead, config: Option<TrainConfig>, seed: u64) -> Self {
        Self {
            weight: head.weight.rows().into_iter().map(|r| r.to_vec()).collect(),
            b: head.bias.to_vec(),
            dim: head.dim(),
            classes: head.classes(),
            config,
            seed,
        }
    }

    pub fn head(&self) -> Result<LinearHead> {
        check_dim(self.classes, self.weight.len())?;
        check_dim(self.classes, self.b.len())?;
        let mut flat = Vec::with_capacity(self.classes * self.dim);
        for row in &self.weight {
            check_dim(self.dim, row.len())?;
            flat.extend_from_slice(row);
        }
        if flat.iter().chain(&self.b).any(|x| !x.is_finite()) {
            return Err(Error::Format("head contains non-finite values".into()));
        }
        Ok(LinearHead {
            weight: Array2::from_shape_vec((self.classes, self.dim), flat).expect("checked"),
            bias: Array1::from(self.b.clone()),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng as _;

    use super::*;

    #[test]
    fn logits_cases() {
        let mut head = LinearHead::zeros(2, 3);
        head.bias = array![0.3, -0.3];
        assert_eq!(head.logits(&[5.0, -1.0, 2.0]).unwrap(), vec![0.3, -0.3]);

        let picker = LinearHead {
            weight: array![[1.0, 0.0, 0.0]],
            bias: array![0.5],
        };
        assert_eq!(picker.logits(&[2.0, 9.0, 9.0]).unwrap(), vec![2.5]);

        let head = LinearHead {
            weight: array![[0.5, -1.0, 2.0], [1.5, 0.25, -0.75]],
            bias: array![0.1, -0.2],
        };
        // 0.5*2 - 1*(-1) + 2*0.5 + 0.1 = 3.1 ; 1.5*2 + 0.25*(-1) - 0.75*0.5 - 0.2 = 2.175
        let y = head.logits(&[2.0, -1.0, 0.5]).unwrap();
        assert_abs_diff_eq!(y[0], 3.1, epsilon = 1e-12);
        assert_abs_diff_eq!(y[1], 2.175, epsilon = 1e-12);
        assert!(head.logits(&[1.0]).is_err());
    }

    #[test]
    fn cross_entropy_cases() {
        assert_abs_diff_eq!(cross_entropy(&[0.0, 0.0], 1), std::f64::consts::LN_2, epsilon = 1e-15);
        assert!(cross_entropy(&[30.0, -30.0], 0) < 1e-20);
        assert_abs_diff_eq!(cross_entropy(&[1.0, 2.0], 0), (1.0 + 1f64.exp()).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(cross_entropy(&[1.0, 2.0], 0), 1.3133, epsilon = 1e-4);
        assert!(cross_entropy(&[1000.0, -1000.0], 1).is_finite());
    }

    #[test]
    fn gradient_cases() {
        let mut head = LinearHead::zeros(2, 2);
        head.weight = array![[20.0, 0.0], [-20.0, 0.0]];
        let z = [3.0, 1.0];
        let g = grad(&head, &[&z], &[0]).unwrap();
        let norm = g.weight.iter().chain(g.bias.iter()).map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= 1e-9);

        let g = grad(&LinearHead::zeros(2, 2), &[&[1.0, 1.0]], &[1]).unwrap();
        assert_eq!(g.bias, array![0.5, -0.5]);
        assert!(grad(&head, &[], &[]).is_err());
    }

    #[test]
    fn adamw_without_gradient() {
        let cfg = TrainConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut head = LinearHead::init(2, 4, 1);
        let before = head.clone();
        let zero = Gradients {
            weight: Array2::zeros((2, 4)),
            bias: Array1::zeros(2),
        };
        let mut state = AdamState::new(&head);
        adamw_step(&mut head, &zero, &mut state, 1, 0.001, &cfg);
        assert_eq!(head, before);

        let cfg = TrainConfig {
            weight_decay: 0.1,
            ..Default::default()
        };
        adamw_step(&mut head, &zero, &mut state, 2, 0.01, &cfg);
        assert_eq!(head.weight, before.weight.mapv(|w| w * (1.0 - 0.01 * 0.1)));
        assert_eq!(head.bias, before.bias);
    }

    #[test]
    fn adamw_single_step_by_hand() {
        // p = 0.5, g = 0.2, fresh state, t = 1, lr = 0.01, λ = 0.1
        // m = 0.02, v = 4e-5, m̂ = 0.2, v̂ = 0.04, update = 0.01 * 0.2 / (0.2 + 1e-8)
        let cfg = TrainConfig::default();
        let mut head = LinearHead {
            weight: array![[0.5]],
            bias: array![-0.25],
        };
        let g = Gradients {
            weight: array![[0.2]],
            bias: array![-0.4],
        };
        let mut state = AdamState::new(&head);
        adamw_step(&mut head, &g, &mut state, 1, 0.01, &cfg);
        let w_adam = 0.5 - 0.01 * 0.2 / (0.2 + 1e-8);
        assert_abs_diff_eq!(head.weight[[0, 0]], w_adam * (1.0 - 0.01 * 0.1), epsilon = 1e-15);
        assert_abs_diff_eq!(head.bias[0], -0.25 + 0.01 * 0.4 / (0.4 + 1e-8), epsilon = 1e-15);
        assert_abs_diff_eq!(state.m_weight[[0, 0]], 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(state.v_weight[[0, 0]], 4e-5, epsilon = 1e-18);
    }

    #[test]
    fn cosine_points() {
        assert_eq!(cosine_lr(0, 10, 0.001), 0.001);
        assert_abs_diff_eq!(cosine_lr(10, 10, 0.001), 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(cosine_lr(5, 10, 0.001), 0.0005, epsilon = 1e-18);
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[0, 1], &[0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.75);
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn metrics_confusion() {
        let head = LinearHead {
            weight: array![[-1.0], [1.0]],
            bias: array![0.0, 0.0],
        };
        let data = LabeledSet::new(vec![vec![1.0], vec![-1.0], vec![2.0], vec![-3.0]], vec![1, 0, 0, 0]).unwrap();
        let m = evaluate(&head, &data).unwrap();
        assert_eq!(m.confusion, vec![vec![2, 1], vec![0, 1]]);
        assert_eq!(m.confusion.iter().flatten().sum::<usize>(), 4);
        assert_eq!(m.test_accuracy, 0.75);
        assert_eq!(m.precision, vec![1.0, 0.5]);
        assert_eq!(m.recall[0], 2.0 / 3.0);
    }

    #[test]
    fn head_file_round_trip() {
        let head = LinearHead::init(2, 5, 11);
        let file = HeadFile::new(&head, Some(TrainConfig::default()), 11);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"W\""));
        let back: HeadFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.head().unwrap(), head);
    }

    #[test]
    fn init_bounds() {
        let head = LinearHead::init(2, 16, 3);
        assert!(head.weight.iter().all(|w| w.abs() <= 0.25));
        assert!(head.bias.iter().all(|&b| b == 0.0));
        assert_eq!(head, LinearHead::init(2, 16, 3));
    }

    proptest! {
        #[test]
        fn loss_nonnegative(y0 in -50.0f64..50.0, y1 in -50.0f64..50.0, label in 0usize..2) {
            prop_assert!(cross_entropy(&[y0, y1], label) >= 0.0);
        }

        #[test]
        fn argmax_ignores_common_bias_shift(w in proptest::collection::vec(-2.0f64..2.0, 6), z in proptest::collection::vec(-2.0f64..2.0, 3), shift in -10.0f64..10.0) {
            let head = LinearHead { weight: Array2::from_shape_vec((2, 3), w).unwrap(), bias: array![0.1, -0.2] };
            let mut shifted = head.clone();
            shifted.bias += shift;
            let y = head.logits(&z).unwrap();
            prop_assume!((y[0] - y[1]).abs() > 1e-9);
            prop_assert_eq!(head.predict(&z).unwrap(), shifted.predict(&z).unwrap());
        }

        #[test]
        fn zero_decay_is_plain_adam(seed in any::<u64>(), t in 1usize..20, lr in 1e-4f64..1e-1) {
            let head = LinearHead::init(2, 3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let g = Gradients {
                weight: Array2::from_shape_fn((2, 3), |_| rng.random_range(-1.0..1.0)),
                bias: Array1::from_shape_fn(2, |_| rng.random_range(-1.0..1.0)),
            };
            let cfg = TrainConfig { weight_decay: 0.0, ..Default::default() };
            let mut a = head.clone();
            let mut sa = AdamState::new(&a);
            adamw_step(&mut a, &g, &mut sa, t, lr, &cfg);
            // plain Adam written out directly
            let bc1 = 1.0 - 0.9f64.powi(t as i32);
            let bc2 = 1.0 - 0.999f64.powi(t as i32);
            let adam = |p: f64, g: f64| {
                let m = 0.1 * g;
                let v = 0.001 * g * g;
                p - lr * (m / bc1) / ((v / bc2).sqrt() + 1e-8)
            };
            for (got, (p, g)) in a.weight.iter().zip(head.weight.iter().zip(g.weight.iter())) {
                prop_assert!((got - adam(*p, *g)).abs() <= 1e-12);
            }
            for (got, (p, g)) in a.bias.iter().zip(head.bias.iter().zip(g.bias.iter())) {
                prop_assert!((got - adam(*p, *g)).abs() <= 1e-12);
            }
        }
    }
}
