//! Gradient and loss embeddings built from a model's own predictions.
//!
//! For a softmax head `p = softmax(W h + b)` and the self-predicted label
//! `y = argmax p`, the cross-entropy gradient is `dL/dW = (p - e_y) h^T` and
//! `dL/db = p - e_y`. The embedding is the weight block flattened class-major,
//! followed by the bias block, so its dimension is `C * (h + 1)` and its norm
//! factors as `|p - e_y| * |[h; 1]|`.

use crate::error::{Error, Result};
use crate::stats::mean_std;
use crate::tensors::{check_row, TokenDists};

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradEmbed {
    pub vec: Vec<f64>,
    pub norm: f64,
}

pub fn gradient_embedding(probs: &[f64], hidden: &[f64], with_bias: bool) -> Result<GradEmbed> {
    if probs.is_empty() {
        return Err(Error::ShapeMismatch("empty probability vector".into()));
    }
    check_row(probs).map_err(|sum| Error::RowNotNormalized { id: 0, row: 0, sum })?;
    if hidden.iter().any(|x| !x.is_finite()) {
        return Err(Error::ShapeMismatch("non-finite hidden state".into()));
    }
    let y = argmax(probs);
    let residual: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(c, &p)| if c == y { p - 1.0 } else { p })
        .collect();
    let h = hidden.len();
    let mut vec = Vec::with_capacity(residual.len() * (h + 1));
    for &r in &residual {
        vec.extend(hidden.iter().map(|&x| r * x));
    }
    if with_bias {
        vec.extend_from_slice(&residual);
    }
    let norm = l2_norm(&vec);
    Ok(GradEmbed { vec, norm })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossEmbed {
    pub vec: Vec<f64>,
    pub norm: f64,
}

/// Per-token self-predicted loss `-ln max_c p`, zero-padded to length `m`.
pub fn loss_embedding(dists: &TokenDists, m: usize) -> Result<LossEmbed> {
    let n = dists.n_rows();
    if n > m {
        return Err(Error::ShapeMismatch(format!(
            "{n} tokens exceed embedding length {m}"
        )));
    }
    let mut vec = vec![0.0; m];
    for (slot, row) in vec.iter_mut().zip(dists.rows()) {
        let p = row[argmax(row)];
        // -ln(1) is -0.0
        *slot = (-p.ln()).max(0.0);
    }
    let norm = l2_norm(&vec);
    Ok(LossEmbed { vec, norm })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormStats {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl NormStats {
    /// Moments over the norms of the whole corpus.
    pub fn new(norms: &[f64], lambda: f64) -> Self {
        let (mu, sigma) = mean_std(norms);
        NormStats { mu, sigma, lambda }
    }

    pub fn threshold(&self) -> f64 {
        self.mu + self.lambda * self.sigma
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome {
    /// Survivors in ascending id order, then any fallback ids.
    pub candidates: Vec<usize>,
    pub fallback: bool,
}

/// Keeps ids whose norm exceeds `mu + lambda * sigma`; when fewer than `need`
/// survive, tops up from the rest in descending norm order.
pub fn norm_filter(ids: &[usize], norms: &[f64], stats: &NormStats, need: usize) -> FilterOutcome {
    let cut = stats.threshold();
    let mut pairs: Vec<(usize, f64)> = ids.iter().copied().zip(norms.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    let (mut kept, mut rest): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|p| p.1 > cut);
    let fallback = kept.len() < need;
    if fallback {
        rest.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let missing = need - kept.len();
        kept.extend(rest.into_iter().take(missing));
    }
    FilterOutcome {
        candidates: kept.into_iter().map(|p| p.0).collect(),
        fallback,
    }
}
