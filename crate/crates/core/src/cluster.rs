//! k-means++ seeding used as a batch selector, and cosine-neighbour expansion.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::par;
use crate::rng::SeededRng;

/// How the first seed is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KppFirst {
    /// Proportional to the squared norm, i.e. squared distance from the origin.
    #[default]
    Norm,
    Uniform,
}

impl fmt::Display for KppFirst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KppFirst::Norm => "norm",
            KppFirst::Uniform => "uniform",
        })
    }
}

impl FromStr for KppFirst {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(KppFirst::Norm),
            "uniform" => Ok(KppFirst::Uniform),
            _ => Err(Error::InvalidParam(format!(
                "unknown k-means++ first rule {s:?}"
            ))),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Picks `k` of the `vectors` by k-means++ seeding and returns them in pick
/// order as `(id, weight)`, where `weight` is the squared distance the pick
/// was sampled by. Points already at distance zero from a pick are only
/// taken once nothing else remains; those picks are uniform.
pub fn kmeanspp_select(
    ids: &[usize],
    vectors: &[Vec<f64>],
    k: usize,
    seed: u64,
    first: KppFirst,
) -> Result<Vec<(usize, f64)>> {
    let n = ids.len();
    if vectors.len() != n {
        return Err(Error::ShapeMismatch("ids and vectors misaligned".into()));
    }
    if k > n {
        return Err(Error::InvalidParam(format!(
            "k = {k} exceeds {n} candidates"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let dim = vectors[0].len();
    if dim == 0 {
        return Err(Error::ShapeMismatch("zero-dimensional embeddings".into()));
    }
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::ShapeMismatch(
            "embeddings differ in dimension".into(),
        ));
    }

    let mut rng = SeededRng::new(seed);
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);
    let mut dist: Vec<f64> = match first {
        KppFirst::Norm => vectors
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum())
            .collect(),
        KppFirst::Uniform => vec![1.0; n],
    };

    let positions: Vec<usize> = (0..n).collect();
    while picks.len() < k {
        let pos = match rng.weighted_index(&dist) {
            Some(p) => p,
            None => {
                // every remaining point coincides with a pick
                let open: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                open[rng.below(open.len() as u64) as usize]
            }
        };
        picks.push((ids[pos], dist[pos]));
        chosen[pos] = true;
        let center = &vectors[pos];
        let fresh = par::map(&positions, |&i| {
            if chosen[i] {
                0.0
            } else {
                sq_dist(&vectors[i], center)
            }
        });
        let first_round = picks.len() == 1;
        for (d, f) in dist.iter_mut().zip(fresh) {
            *d = if first_round { f } else { d.min(f) };
        }
    }
    Ok(picks)
}

pub fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(
            "cosine of vectors with different lengths".into(),
        ));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate(
            "cosine similarity of a zero vector".into(),
        ));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// One entry of an expanded selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Expanded {
    Center(usize),
    Neighbor { id: usize, center: usize, sim: f64 },
}

impl Expanded {
    pub fn id(&self) -> usize {
        match *self {
            Expanded::Center(id) | Expanded::Neighbor { id, .. } => id,
        }
    }
}

/// Follows each center with its `gamma` most cosine-similar unselected
/// examples (ties by ascending id), stopping once `k` entries are collected.
pub fn expand_similar(
    centers: &[usize],
    ids: &[usize],
    sent_embeds: &[Vec<f64>],
    gamma: usize,
    k: usize,
) -> Result<Vec<Expanded>> {
    if centers.is_empty() {
        return Err(Error::InvalidParam("no centers to expand".into()));
    }
    if ids.len() != sent_embeds.len() {
        return Err(Error::ShapeMismatch(
            "ids and sentence embeddings misaligned".into(),
        ));
    }
    let lookup = |id: usize| -> Result<&Vec<f64>> {
        ids.binary_search(&id)
            .map(|p| &sent_embeds[p])
            .map_err(|_| Error::ShapeMismatch(format!("no sentence embedding for id {id}")))
    };
    if ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParam(
            "candidate ids must be strictly ascending".into(),
        ));
    }

    let mut taken: HashSet<usize> = centers.iter().copied().collect();
    let mut out = Vec::with_capacity(k);
    for &c in centers {
        if out.len() >= k {
            break;
        }
        out.push(Expanded::Center(c));
        if gamma == 0 {
            continue;
        }
        let anchor = lookup(c)?;
        let sims = par::map(ids, |&id| {
            if taken.contains(&id) {
                Ok(None)
            } else {
                cosine_sim(anchor, lookup(id)?).map(|s| Some((id, s)))
            }
        });
        let mut ranked = Vec::new();
        for s in sims {
            if let Some(pair) = s? {
                ranked.push(pair);
            }
        }
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (id, sim) in ranked.into_iter().take(gamma) {
            if out.len() >= k {
                break;
            }
            taken.insert(id);
            out.push(Expanded::Neighbor { id, center: c, sim });
        }
    }
    Ok(out)
}

/// Number of centers to seed so that `gamma` neighbours each land on `k`.
pub fn centers_for(k: usize, gamma: usize) -> usize {
    k.div_ceil(gamma + 1)
}
