//! Affine softmax classifier trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensors::{TensorSet, TokenDists};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on the weights (not the biases).
    pub l2: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            learning_rate: 0.1,
            epochs: 300,
            l2: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, x: Vec<f64>, y: usize) {
        self.features.push(x);
        self.labels.push(y);
    }
}

/// `classes x (dim + 1)` weights, bias in the last column.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyModel {
    pub classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub hyper: Hyper,
}

pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

impl ToyModel {
    pub fn zeros(classes: usize, dim: usize, hyper: Hyper) -> Self {
        ToyModel {
            classes,
            dim,
            weights: vec![0.0; classes * (dim + 1)],
            hyper,
        }
    }

    fn row(&self, c: usize) -> &[f64] {
        let w = self.dim + 1;
        &self.weights[c * w..(c + 1) * w]
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let r = self.row(c);
                r[..self.dim].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + r[self.dim]
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.logits(x);
        softmax_in_place(&mut z);
        z
    }

    /// Mean cross-entropy plus the L2 term.
    pub fn loss(&self, data: &LabeledSet) -> f64 {
        let ce: f64 = data
            .features
            .iter()
            .zip(&data.labels)
            .map(|(x, &y)| -self.predict(x)[y].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / data.len().max(1) as f64;
        ce + 0.5 * self.hyper.l2 * self.weight_sq()
    }

    fn weight_sq(&self) -> f64 {
        (0..self.classes)
            .flat_map(|c| self.row(c)[..self.dim].iter())
            .map(|w| w * w)
            .sum()
    }

    /// Number of correctly classified examples.
    pub fn correct(&self, data: &LabeledSet) -> usize {
        data.features
            .iter()
            .zip(&data.labels)
            .filter(|(x, &y)| crate::embeddings::argmax(&self.predict(x)) == y)
            .count()
    }

    pub fn accuracy(&self, data: &LabeledSet) -> f64 {
        self.correct(data) as f64 / data.len().max(1) as f64
    }

    /// One full-batch gradient step; returns the loss before the step.
    fn step(&mut self, data: &LabeledSet) -> f64 {
        let w = self.dim + 1;
        let n = data.len() as f64;
        let mut grad = vec![0.0; self.weights.len()];
        let mut ce = 0.0;
        for (x, &y) in data.features.iter().zip(&data.labels) {
            let p = self.predict(x);
            ce -= p[y].max(f64::MIN_POSITIVE).ln();
            for (c, &pc) in p.iter().enumerate() {
                let r = pc - if c == y { 1.0 } else { 0.0 };
                let g = &mut grad[c * w..(c + 1) * w];
                for (gj, xj) in g[..self.dim].iter_mut().zip(x) {
                    *gj += r * xj;
                }
                g[self.dim] += r;
            }
        }
        let loss = ce / n + 0.5 * self.hyper.l2 * self.weight_sq();
        let lr = self.hyper.learning_rate;
        for c in 0..self.classes {
            for j in 0..w {
                let i = c * w + j;
                let mut g = grad[i] / n;
                if j < self.dim {
                    g += self.hyper.l2 * self.weights[i];
                }
                self.weights[i] -= lr * g;
            }
        }
        loss
    }

    /// Continues training this model on `data` for `hyper.epochs` steps.
    pub fn fit(&mut self, data: &LabeledSet) -> Result<()> {
        for epoch in 0..self.hyper.epochs {
            let loss = self.step(data);
            if !loss.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Diverged(epoch));
            }
        }
        Ok(())
    }
}

/// Trains from zero weights.
pub fn train_softmax(data: &LabeledSet, classes: usize, hyper: Hyper) -> Result<ToyModel> {
    if data.is_empty() {
        return Err(Error::InvalidParam("cannot train on an empty set".into()));
    }
    let dim = data.dim();
    if data.features.iter().any(|x| x.len() != dim) {
        return Err(Error::ShapeMismatch(
            "feature vectors differ in dimension".into(),
        ));
    }
    if let Some(&y) = data.labels.iter().find(|&&y| y >= classes) {
        return Err(Error::InvalidParam(format!(
            "label {y} out of range for {classes} classes"
        )));
    }
    let mut model = ToyModel::zeros(classes, dim, hyper);
    model.fit(data)?;
    Ok(model)
}

/// Tensors for selection: one softmax row per example, the raw features as
/// the hidden state feeding the head, and the raw features again as the
/// sentence embedding.
pub fn model_outputs(model: &ToyModel, ids: &[usize], features: &[Vec<f64>]) -> Result<TensorSet> {
    if let Some(x) = features.iter().find(|x| x.len() != model.dim) {
        return Err(Error::ShapeMismatch(format!(
            "feature dimension {} does not match model dimension {}",
            x.len(),
            model.dim
        )));
    }
    let dists = features
        .iter()
        .map(|x| TokenDists::new(model.classes, model.predict(x)))
        .collect::<Result<Vec<_>>>()?;
    TensorSet::new(
        model.classes,
        crate::tensors::DEFAULT_MAX_LEN,
        ids.to_vec(),
        Some(dists),
        Some(features.to_vec()),
        Some(features.to_vec()),
    )
}
