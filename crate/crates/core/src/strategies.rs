//! One entry point for every selection strategy.

use std::fmt;
use std::str::FromStr;

use crate::cluster::{centers_for, expand_similar, kmeanspp_select, Expanded, KppFirst};
use crate::corpus::Corpus;
use crate::dce::{select_dce, DceSign, DEFAULT_BATCH};
use crate::embeddings::{gradient_embedding, loss_embedding, norm_filter, NormStats};
use crate::error::{Error, Result};
use crate::ngram::DEFAULT_ORDER;
use crate::par;
use crate::pe::{select_pe, sentence_pe, PeStats};
use crate::rng::SeededRng;
use crate::selection::{Param, Selection};
use crate::tensors::{Array, TensorSet};

pub const LAMBDA_GRID: [f64; 3] = [0.0, 0.5, 1.0];
pub const GAMMA_GRID: [usize; 4] = [0, 1, 2, 3];
/// The LE-to-GE routing warning is printed once per process.
static ROUTE_WARNED: std::sync::atomic::AtomicBool = std::sync::atomic::AtomicBool::new(false);

pub const K_GRID: [usize; 5] = [10, 50, 100, 500, 1000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyName {
    Rand,
    Dce,
    Pe,
    Ge,
    Le,
}

impl StrategyName {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Rand => "rand",
            StrategyName::Dce => "dce",
            StrategyName::Pe => "pe",
            StrategyName::Ge => "ge",
            StrategyName::Le => "le",
        }
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rand" => StrategyName::Rand,
            "dce" => StrategyName::Dce,
            "pe" => StrategyName::Pe,
            "ge" => StrategyName::Ge,
            "le" => StrategyName::Le,
            _ => return Err(Error::InvalidParam(format!("unknown strategy {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategySpec {
    pub name: StrategyName,
    pub k: usize,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub gamma: Option<usize>,
    pub g: Option<usize>,
    /// Restricts GE/LE to examples above `mu + lambda * sigma`.
    pub filter_enabled: bool,
    pub dce_sign: DceSign,
    pub ngram_order: usize,
    pub kpp_first: KppFirst,
    pub ge_bias: bool,
}

impl StrategySpec {
    pub fn new(name: StrategyName, k: usize, seed: u64) -> Self {
        StrategySpec {
            name,
            k,
            seed,
            lambda: None,
            gamma: None,
            g: None,
            filter_enabled: false,
            dce_sign: DceSign::Prose,
            ngram_order: DEFAULT_ORDER,
            kpp_first: KppFirst::Norm,
            ge_bias: true,
        }
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        if matches!(self.name, StrategyName::Ge | StrategyName::Le) {
            self.filter_enabled = true;
        }
        self
    }

    pub fn gamma(mut self, gamma: usize) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn batch(mut self, g: usize) -> Self {
        self.g = Some(g);
        self
    }

    pub fn validate(&self) -> Result<()> {
        use StrategyName::*;
        if self.k == 0 {
            return Err(Error::InvalidParam("k must be at least 1".into()));
        }
        if self.gamma.is_some() && self.name != Ge {
            return Err(Error::InvalidParam("gamma is a GE parameter".into()));
        }
        if let Some(g) = self.gamma {
            if !GAMMA_GRID.contains(&g) {
                return Err(Error::InvalidParam(format!(
                    "gamma must be one of 0..=3, got {g}"
                )));
            }
        }
        if self.g.is_some() && self.name != Dce {
            return Err(Error::InvalidParam(
                "the batch size g is a DCE parameter".into(),
            ));
        }
        if self.g == Some(0) {
            return Err(Error::InvalidParam(
                "DCE batch size must be at least 1".into(),
            ));
        }
        if self.lambda.is_some() && !matches!(self.name, Pe | Ge | Le) {
            return Err(Error::InvalidParam("lambda is a PE/GE/LE parameter".into()));
        }
        if self.filter_enabled && !matches!(self.name, Ge | Le) {
            return Err(Error::InvalidParam(
                "the norm filter applies to GE and LE only".into(),
            ));
        }
        if let Some(l) = self.lambda {
            if !l.is_finite() {
                return Err(Error::InvalidParam("lambda must be finite".into()));
            }
            if !LAMBDA_GRID.contains(&l) {
                log::warn!("lambda = {l} is outside the usual grid {{0, 0.5, 1}}");
            }
        }
        if self.ngram_order == 0 {
            return Err(Error::InvalidParam(
                "n-gram order must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn filter_lambda(&self) -> Option<f64> {
        (self.filter_enabled || (self.lambda.is_some() && self.name != StrategyName::Pe))
            .then(|| self.lambda.unwrap_or(0.0))
    }

    /// Human-readable label, e.g. `ge(gamma=1)` or `le(lambda=0.5)`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(l) = self.lambda {
            parts.push(format!("lambda={l}"));
        } else if self.filter_enabled {
            parts.push("lambda=0".to_string());
        }
        if let Some(g) = self.gamma {
            parts.push(format!("gamma={g}"));
        }
        if let Some(g) = self.g {
            parts.push(format!("g={g}"));
        }
        if parts.is_empty() {
            self.name.to_string()
        } else {
            format!("{}({})", self.name, parts.join(","))
        }
    }

    /// Rebuilds the spec recorded in a selection's parameters.
    pub fn from_selection(sel: &Selection) -> Result<Self> {
        let name: StrategyName = match sel.params.get("routed_from") {
            Some(Param::Str(s)) => s.parse()?,
            _ => sel.strategy.parse()?,
        };
        let mut spec = StrategySpec::new(name, sel.k, sel.seed);
        for (key, value) in &sel.params {
            match (key.as_str(), value) {
                ("lambda", Param::Float(l)) => spec.lambda = Some(*l),
                ("lambda", Param::Int(l)) => spec.lambda = Some(*l as f64),
                ("gamma", Param::Int(g)) => spec.gamma = Some(*g as usize),
                ("g", Param::Int(g)) => spec.g = Some(*g as usize),
                ("filter", Param::Bool(f)) => spec.filter_enabled = *f,
                ("order", Param::Int(o)) => spec.ngram_order = *o as usize,
                ("sign", Param::Str(s)) => spec.dce_sign = s.parse()?,
                ("kpp_first", Param::Str(s)) => spec.kpp_first = s.parse()?,
                ("bias", Param::Bool(b)) => spec.ge_bias = *b,
                _ => {}
            }
        }
        if name != StrategyName::Ge && spec.gamma == Some(0) {
            spec.gamma = None;
        }
        Ok(spec)
    }
}

/// Parses `name[:key=value+key=value...]`, e.g. `pe:lambda=1` or
/// `ge:gamma=1+lambda=0.5`. `k` and `seed` are filled in by the caller.
impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut spec = StrategySpec::new(name.trim().parse()?, 1, 0);
        for kv in rest.split('+').filter(|p| !p.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidParam(format!("expected key=value, got {kv:?}")))?;
            let bad = || Error::InvalidParam(format!("bad value for {key}: {value:?}"));
            match key {
                "lambda" => spec = spec.lambda(value.parse().map_err(|_| bad())?),
                "gamma" => spec.gamma = Some(value.parse().map_err(|_| bad())?),
                "g" => spec.g = Some(value.parse().map_err(|_| bad())?),
                "order" => spec.ngram_order = value.parse().map_err(|_| bad())?,
                "sign" => spec.dce_sign = value.parse()?,
                "kpp_first" => spec.kpp_first = value.parse()?,
                "filter" => spec.filter_enabled = value.parse().map_err(|_| bad())?,
                "bias" => spec.ge_bias = value.parse().map_err(|_| bad())?,
                _ => {
                    return Err(Error::InvalidParam(format!(
                        "unknown strategy parameter {key:?}"
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Uniform sample of `k` positions out of `0..n` without replacement: the
/// prefix of a seeded Fisher–Yates shuffle.
pub fn select_rand(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidParam(format!(
            "cannot draw {k} of {n} examples"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below((n - i) as u64) as usize;
        perm.swap(i, j);
    }
    perm.truncate(k);
    Ok(perm)
}

/// Runs `spec` on `corpus`. All required tensor arrays are checked before
/// any work starts; labels are never consulted.
pub fn select(
    spec: &StrategySpec,
    corpus: &Corpus,
    tensors: Option<&TensorSet>,
) -> Result<Selection> {
    spec.validate()?;
    let name = spec.name.as_str();
    let need = |array: Array| -> Result<&TensorSet> {
        let ts = tensors.ok_or(Error::MissingTensor {
            strategy: name,
            array: array.name(),
        })?;
        ts.require(corpus, name, array)?;
        Ok(ts)
    };
    match spec.name {
        StrategyName::Pe | StrategyName::Le => {
            need(Array::TokenDists)?;
        }
        StrategyName::Ge => {
            need(Array::TokenDists)?;
            need(Array::Hidden)?;
            if spec.gamma.unwrap_or(0) > 0 {
                need(Array::SentEmbed)?;
            }
        }
        StrategyName::Rand | StrategyName::Dce => {}
    }
    if let Some(ts) = tensors {
        ts.validate(corpus)?;
    }

    let n = corpus.len();
    let k = spec.k.min(n);
    if spec.k > n {
        log::warn!(
            "k = {} exceeds corpus size {n}; selecting every example",
            spec.k
        );
    }

    let mut sel = match spec.name {
        StrategyName::Rand => {
            let ids = corpus.ids();
            let mut sel = Selection::new(name, spec.k, n, spec.seed);
            for pos in select_rand(n, k, spec.seed)? {
                sel.push(ids[pos], 0.0);
            }
            sel
        }
        StrategyName::Dce => {
            let g = spec.g.unwrap_or(DEFAULT_BATCH);
            select_dce(corpus, k, g, spec.ngram_order, spec.dce_sign)?
        }
        StrategyName::Pe => {
            let ts = tensors.expect("checked above");
            let ids = corpus.ids();
            let pe = par::map(&ids, |&id| sentence_pe(ts.dists(id).expect("checked")))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let stats = PeStats::new(ids, pe, spec.lambda.unwrap_or(0.0))?;
            select_pe(&stats, k)?
        }
        StrategyName::Ge => select_ge(spec, corpus, tensors.expect("checked above"), k)?,
        StrategyName::Le => {
            let ts = tensors.expect("checked above");
            if ts.is_classification() && ts.has(Array::Hidden) {
                let msg =
                    "LE on single-row distributions reduces to one loss value; using GE instead";
                if ROUTE_WARNED.swap(true, std::sync::atomic::Ordering::Relaxed) {
                    log::debug!("{msg}");
                } else {
                    log::warn!("{msg}");
                }
                let mut routed = spec.clone();
                routed.name = StrategyName::Ge;
                let sel = select_ge(&routed, corpus, ts, k)?;
                sel.param("routed_from", "le")
            } else {
                select_le(spec, corpus, ts, k)?
            }
        }
    };
    sel.k = spec.k;
    sel.n = n;
    sel.seed = spec.seed;
    sel.validate()?;
    Ok(sel)
}

fn select_ge(spec: &StrategySpec, corpus: &Corpus, ts: &TensorSet, k: usize) -> Result<Selection> {
    let ids = corpus.ids();
    let embeds = par::map(&ids, |&id| {
        let dists = ts.dists(id).expect("checked");
        if dists.n_rows() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "GE needs one distribution row per example; example {id} has {}",
                dists.n_rows()
            )));
        }
        gradient_embedding(dists.row(0), ts.hidden(id).expect("checked"), spec.ge_bias)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = embeds.iter().map(|e| e.norm).collect();
    let vectors: Vec<Vec<f64>> = embeds.into_iter().map(|e| e.vec).collect();

    let gamma = spec.gamma.unwrap_or(0);
    let n_centers = centers_for(k, gamma);
    let mut sel = Selection::new("ge", k, ids.len(), spec.seed)
        .param("kpp_first", spec.kpp_first.to_string().as_str())
        .param("bias", spec.ge_bias);
    if spec.gamma.is_some() {
        sel = sel.param("gamma", gamma);
    }
    let (cand_ids, cand_vecs, fallback) = filtered(spec, &ids, &norms, &vectors, n_centers);
    if let Some(l) = spec.filter_lambda() {
        sel = sel
            .param("lambda", l)
            .param("filter", true)
            .param("fallback", fallback);
    }
    let picks = kmeanspp_select(&cand_ids, &cand_vecs, n_centers, spec.seed, spec.kpp_first)?;
    if gamma == 0 {
        for (id, w) in picks {
            sel.push(id, w);
        }
        return Ok(sel);
    }
    let centers: Vec<usize> = picks.iter().map(|p| p.0).collect();
    let sents: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| ts.sent_embed(id).expect("checked").to_vec())
        .collect();
    for entry in expand_similar(&centers, &ids, &sents, gamma, k)? {
        match entry {
            Expanded::Center(id) => {
                let w = picks.iter().find(|p| p.0 == id).map_or(0.0, |p| p.1);
                sel.push(id, w);
            }
            Expanded::Neighbor { id, sim, .. } => sel.push(id, sim),
        }
    }
    Ok(sel)
}

fn select_le(spec: &StrategySpec, corpus: &Corpus, ts: &TensorSet, k: usize) -> Result<Selection> {
    let ids = corpus.ids();
    let m = ts.max_len();
    let embeds = par::map(&ids, |&id| {
        loss_embedding(ts.dists(id).expect("checked"), m)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = embeds.iter().map(|e| e.norm).collect();
    let vectors: Vec<Vec<f64>> = embeds.into_iter().map(|e| e.vec).collect();
    let mut sel = Selection::new("le", k, ids.len(), spec.seed)
        .param("kpp_first", spec.kpp_first.to_string().as_str());
    let (cand_ids, cand_vecs, fallback) = filtered(spec, &ids, &norms, &vectors, k);
    if let Some(l) = spec.filter_lambda() {
        sel = sel
            .param("lambda", l)
            .param("filter", true)
            .param("fallback", fallback);
    }
    for (id, w) in kmeanspp_select(&cand_ids, &cand_vecs, k, spec.seed, spec.kpp_first)? {
        sel.push(id, w);
    }
    Ok(sel)
}

/// Per-example diagnostic quantity dumped by `score`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreKind {
    Pe,
    GeNorm,
    LeNorm,
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pe" => Ok(ScoreKind::Pe),
            "ge-norm" => Ok(ScoreKind::GeNorm),
            "le-norm" => Ok(ScoreKind::LeNorm),
            _ => Err(Error::InvalidParam(format!("unknown score {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ScoreTable {
    pub ids: Vec<usize>,
    pub values: Vec<f64>,
    /// Population mean and standard deviation of `values`.
    pub mu: f64,
    pub sigma: f64,
}

/// Predictive entropies or embedding norms for every example in `corpus`.
pub fn score_table(
    kind: ScoreKind,
    corpus: &Corpus,
    ts: &TensorSet,
    ge_bias: bool,
) -> Result<ScoreTable> {
    let (name, arrays): (&'static str, &[Array]) = match kind {
        ScoreKind::Pe => ("pe", &[Array::TokenDists]),
        ScoreKind::GeNorm => ("ge", &[Array::TokenDists, Array::Hidden]),
        ScoreKind::LeNorm => ("le", &[Array::TokenDists]),
    };
    for &a in arrays {
        ts.require(corpus, name, a)?;
    }
    ts.validate(corpus)?;
    let ids = corpus.ids();
    let values = par::map(&ids, |&id| {
        let dists = ts.dists(id).expect("checked");
        match kind {
            ScoreKind::Pe => sentence_pe(dists),
            ScoreKind::LeNorm => loss_embedding(dists, ts.max_len()).map(|e| e.norm),
            ScoreKind::GeNorm => {
                if dists.n_rows() != 1 {
                    return Err(Error::ShapeMismatch(format!(
                        "GE needs one distribution row per example; example {id} has {}",
                        dists.n_rows()
                    )));
                }
                gradient_embedding(dists.row(0), ts.hidden(id).expect("checked"), ge_bias)
                    .map(|e| e.norm)
            }
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (mu, sigma) = crate::stats::mean_std(&values);
    Ok(ScoreTable {
        ids,
        values,
        mu,
        sigma,
    })
}

/// Candidate pool after the optional norm filter; statistics always come
/// from the full corpus.
fn filtered(
    spec: &StrategySpec,
    ids: &[usize],
    norms: &[f64],
    vectors: &[Vec<f64>],
    need: usize,
) -> (Vec<usize>, Vec<Vec<f64>>, bool) {
    match spec.filter_lambda() {
        None => (ids.to_vec(), vectors.to_vec(), false),
        Some(lambda) => {
            let stats = NormStats::new(norms, lambda);
            let out = norm_filter(ids, norms, &stats, need);
            let vecs: Vec<Vec<f64>> = out
                .candidates
                .iter()
                .map(|id| vectors[ids.binary_search(id).expect("id from ids")].clone())
                .collect();
            // kmeans++ treats candidates in ascending id order
            let mut pairs: Vec<(usize, Vec<f64>)> = out.candidates.into_iter().zip(vecs).collect();
            pairs.sort_by_key(|p| p.0);
            let (c, v) = pairs.into_iter().unzip();
            (c, v, out.fallback)
        }
    }
}
