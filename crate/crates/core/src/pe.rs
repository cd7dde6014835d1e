//! Predictive-entropy scoring: mean token entropy per sentence, selected
//! around the zone `mu + lambda * sigma` of the corpus distribution.

use crate::error::{Error, Result};
use crate::selection::Selection;
use crate::stats::mean_std;
use crate::tensors::{check_row, TokenDists};

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn token_entropy(dist: &[f64]) -> Result<f64> {
    check_row(dist).map_err(|sum| Error::RowNotNormalized { id: 0, row: 0, sum })?;
    Ok(entropy_unchecked(dist))
}

pub(crate) fn entropy_unchecked(dist: &[f64]) -> f64 {
    let h: f64 = dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    // a one-hot row with rounding noise can land a hair below zero
    h.max(0.0)
}

/// Mean token entropy over the rows of `dists`.
pub fn sentence_pe(dists: &TokenDists) -> Result<f64> {
    let n = dists.n_rows();
    if n == 0 {
        return Err(Error::ShapeMismatch("no token rows".into()));
    }
    let mut total = 0.0;
    for row in dists.rows() {
        total += token_entropy(row)?;
    }
    Ok(total / n as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeStats {
    pub ids: Vec<usize>,
    pub pe: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl PeStats {
    /// `ids`/`pe` cover the whole corpus; the moments are taken over all of it.
    pub fn new(ids: Vec<usize>, pe: Vec<f64>, lambda: f64) -> Result<Self> {
        if ids.is_empty() || ids.len() != pe.len() {
            return Err(Error::ShapeMismatch("PE ids and values misaligned".into()));
        }
        let (mu, sigma) = mean_std(&pe);
        Ok(PeStats {
            ids,
            pe,
            mu,
            sigma,
            lambda,
        })
    }

    pub fn target(&self) -> f64 {
        self.mu + self.lambda * self.sigma
    }

    pub fn scores(&self) -> Vec<f64> {
        let t = self.target();
        self.pe.iter().map(|p| (p - t).abs()).collect()
    }
}

/// The `k` ids closest to the target zone, ties by ascending id.
pub fn select_pe(stats: &PeStats, k: usize) -> Result<Selection> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let mut ranked: Vec<(usize, f64)> = stats.ids.iter().copied().zip(stats.scores()).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut sel = Selection::new("pe", k, stats.ids.len(), 0).param("lambda", stats.lambda);
    for (id, score) in ranked.into_iter().take(k) {
        sel.push(id, score);
    }
    Ok(sel)
}
