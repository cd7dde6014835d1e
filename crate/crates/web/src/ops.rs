//! The demo operations as plain Rust, so they can be tested natively.

use std::sync::Arc;

use fewsel::cluster::{expand_similar, kmeanspp_select, Expanded, KppFirst};
use fewsel::ngram::{train_lm, Vocab};
use fewsel::pe::{select_pe, sentence_pe, PeStats};
use fewsel::tensors::TokenDists;
use serde::Serialize;

#[derive(Debug, Serialize, PartialEq)]
pub struct Pick {
    pub id: usize,
    /// Center this point was attached to; equal to `id` for centers.
    pub center: usize,
}

/// k-means++ seeding over 2-D points, each center followed by its `gamma`
/// most cosine-similar points.
pub fn kmeanspp(
    xy: &[f64],
    k: usize,
    gamma: usize,
    seed: u64,
    uniform_first: bool,
) -> Result<Vec<Pick>, String> {
    if !xy.len().is_multiple_of(2) {
        return Err("points must come as x, y pairs".into());
    }
    let points: Vec<Vec<f64>> = xy.chunks(2).map(<[f64]>::to_vec).collect();
    let ids: Vec<usize> = (0..points.len()).collect();
    if k == 0 || k > points.len() {
        return Err(format!("k must lie in 1..={}", points.len()));
    }
    let first = if uniform_first {
        KppFirst::Uniform
    } else {
        KppFirst::Norm
    };
    let n_centers = fewsel::cluster::centers_for(k, gamma);
    let centers: Vec<usize> = kmeanspp_select(&ids, &points, n_centers, seed, first)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(id, _)| id)
        .collect();
    if gamma == 0 {
        return Ok(centers
            .into_iter()
            .map(|id| Pick { id, center: id })
            .collect());
    }
    let picks = expand_similar(&centers, &ids, &points, gamma, k).map_err(|e| e.to_string())?;
    Ok(picks
        .into_iter()
        .map(|e| match e {
            Expanded::Center(id) => Pick { id, center: id },
            Expanded::Neighbor { id, center, .. } => Pick { id, center },
        })
        .collect())
}

#[derive(Debug, Serialize, PartialEq)]
pub struct PeZone {
    pub entropies: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub target: f64,
    pub selected: Vec<usize>,
}

/// Predictive entropy of one class distribution per example and the `k`
/// examples closest to `mu + lambda * sigma`.
pub fn pe_zone(probs: &[f64], classes: usize, lambda: f64, k: usize) -> Result<PeZone, String> {
    if classes < 2 || probs.is_empty() || !probs.len().is_multiple_of(classes) {
        return Err("need one row of `classes` probabilities per example".into());
    }
    let dists = probs
        .chunks(classes)
        .map(|row| TokenDists::from_rows(&[row.to_vec()]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let entropies = dists
        .iter()
        .map(sentence_pe)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let stats = PeStats::new((0..dists.len()).collect(), entropies.clone(), lambda)
        .map_err(|e| e.to_string())?;
    let sel = select_pe(&stats, k.min(dists.len())).map_err(|e| e.to_string())?;
    Ok(PeZone {
        entropies,
        mu: stats.mu,
        sigma: stats.sigma,
        target: stats.target(),
        selected: sel.ids,
    })
}

/// Per-token entropy (bits) of `sentence` under an n-gram model trained on
/// the non-empty lines of `corpus`, whitespace tokenized.
pub fn sentence_entropy(corpus: &str, sentence: &str, order: usize) -> Result<f64, String> {
    let lines: Vec<Vec<&str>> = corpus
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .filter(|t| !t.is_empty())
        .collect();
    let vocab = Arc::new(Vocab::new(lines.iter().flatten().map(|t| t.to_string())));
    let model = train_lm(&lines, order, vocab).map_err(|e| e.to_string())?;
    let tokens: Vec<&str> = sentence.split_whitespace().collect();
    model.sentence_entropy(&tokens).map_err(|e| e.to_string())
}
