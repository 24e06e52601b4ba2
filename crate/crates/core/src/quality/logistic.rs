//! Three-class softmax regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::tfidf::SparseVector;
use super::{QualityError, QualityLabel, CLASS_ORDER};

pub const NUM_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.5, epochs: 500, l2_lambda: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// One row of `num_features` weights per class, in [`CLASS_ORDER`].
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) bias: [f64; NUM_CLASSES],
    pub(crate) l2_lambda: f64,
    pub(crate) trained_epochs: usize,
}

/// Gradient of the regularized mean cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: [f64; NUM_CLASSES],
}

pub(crate) fn softmax(logits: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.map(|z| (z - max).exp());
    let sum: f64 = exp.iter().sum();
    exp.map(|e| e / sum)
}

impl LogisticModel {
    pub fn zeros(num_features: usize, l2_lambda: f64) -> Self {
        LogisticModel {
            weights: vec![vec![0.0; num_features]; NUM_CLASSES],
            bias: [0.0; NUM_CLASSES],
            l2_lambda,
            trained_epochs: 0,
        }
    }

    /// A model with explicit parameters, one weight row per class.
    pub fn from_parameters(
        weights: Vec<Vec<f64>>,
        bias: [f64; NUM_CLASSES],
        l2_lambda: f64,
    ) -> Result<Self, QualityError> {
        let width = weights.first().map_or(0, Vec::len);
        if weights.len() != NUM_CLASSES || weights.iter().any(|r| r.len() != width) {
            return Err(QualityError::Format("weights must be 3 rows of equal length".into()));
        }
        let finite = weights.iter().flatten().chain(bias.iter()).all(|v| v.is_finite());
        if !finite || l2_lambda.is_nan() || l2_lambda < 0.0 {
            return Err(QualityError::Format("parameters must be finite and l2_lambda >= 0".into()));
        }
        Ok(LogisticModel { weights, bias, l2_lambda, trained_epochs: 0 })
    }

    pub fn num_features(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> [f64; NUM_CLASSES] {
        self.bias
    }

    pub fn trained_epochs(&self) -> usize {
        self.trained_epochs
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    pub fn logits(&self, x: &SparseVector) -> [f64; NUM_CLASSES] {
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            *zc += x.dot_dense(&self.weights[c]);
        }
        z
    }

    pub fn probabilities(&self, x: &SparseVector) -> [f64; NUM_CLASSES] {
        softmax(self.logits(x))
    }

    /// Argmax label; ties resolve to the earlier class in [`CLASS_ORDER`].
    pub fn predict(&self, x: &SparseVector) -> (QualityLabel, [f64; NUM_CLASSES]) {
        let p = self.probabilities(x);
        let mut best = 0;
        for c in 1..NUM_CLASSES {
            if p[c] > p[best] {
                best = c;
            }
        }
        (CLASS_ORDER[best], p)
    }

    /// `mean(-ln p[y]) + lambda / 2 * |W|^2`; the bias is not penalized.
    pub fn loss(&self, xs: &[SparseVector], ys: &[QualityLabel]) -> f64 {
        let ce: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let z = self.logits(x);
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - z[y.class_index()]
            })
            .sum::<f64>()
            / xs.len() as f64;
        let sq: f64 = self.weights.iter().flatten().map(|w| w * w).sum();
        ce + 0.5 * self.l2_lambda * sq
    }

    pub fn gradient(&self, xs: &[SparseVector], ys: &[QualityLabel]) -> Gradient {
        let n = xs.len() as f64;
        let mut gw = vec![vec![0.0; self.num_features()]; NUM_CLASSES];
        let mut gb = [0.0; NUM_CLASSES];
        for (x, y) in xs.iter().zip(ys) {
            let mut residual = self.probabilities(x);
            residual[y.class_index()] -= 1.0;
            for c in 0..NUM_CLASSES {
                gb[c] += residual[c];
                for &(j, v) in &x.entries {
                    gw[c][j] += residual[c] * v;
                }
            }
        }
        for c in 0..NUM_CLASSES {
            gb[c] /= n;
            for (g, w) in gw[c].iter_mut().zip(&self.weights[c]) {
                *g = *g / n + self.l2_lambda * w;
            }
        }
        Gradient { weights: gw, bias: gb }
    }

    fn step(&mut self, g: &Gradient, lr: f64) {
        for c in 0..NUM_CLASSES {
            self.bias[c] -= lr * g.bias[c];
            for (w, d) in self.weights[c].iter_mut().zip(&g.weights[c]) {
                *w -= lr * d;
            }
        }
    }
}

/// Loss recorded before the first update and after every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub loss_history: Vec<f64>,
}

/// Trains from zero-initialized parameters. Needs at least two distinct
/// classes among the labels.
pub fn train(
    cfg: &TrainConfig,
    num_features: usize,
    xs: &[SparseVector],
    ys: &[QualityLabel],
) -> Result<(LogisticModel, TrainReport), QualityError> {
    if xs.len() != ys.len() {
        return Err(QualityError::LengthMismatch { vectors: xs.len(), labels: ys.len() });
    }
    if xs.is_empty() {
        return Err(QualityError::EmptyCorpus);
    }
    let distinct = CLASS_ORDER.iter().filter(|c| ys.contains(c)).count();
    if distinct < 2 {
        return Err(QualityError::DegenerateTrainingSet);
    }
    if let Some(bad) = xs.iter().flat_map(|x| &x.entries).find(|(j, _)| *j >= num_features) {
        return Err(QualityError::DimensionMismatch { expected: num_features, actual: bad.0 + 1 });
    }
    if !(cfg.learning_rate > 0.0 && cfg.l2_lambda >= 0.0) {
        return Err(QualityError::Config(format!("bad training config {cfg:?}")));
    }
    let mut model = LogisticModel::zeros(num_features, cfg.l2_lambda);
    let mut loss_history = Vec::with_capacity(cfg.epochs + 1);
    loss_history.push(model.loss(xs, ys));
    for _ in 0..cfg.epochs {
        let g = model.gradient(xs, ys);
        model.step(&g, cfg.learning_rate);
        model.trained_epochs += 1;
        loss_history.push(model.loss(xs, ys));
    }
    Ok((model, TrainReport { loss_history }))
}
