//! Gaussian pivot/target tasks with a controlled transfer gap.
//!
//! Non-rare classes sit at `±separation` along the leading axes. The rare
//! class sits at the origin of those axes, offset by `separation` along the
//! last axis, which makes it equidistant from the first two classes. The
//! target domain translates every class mean by `shift` along axis 0 and
//! skews the class priors, so the rare class can be absent from the pivot
//! data but common in the target pool.

use serde::{Deserialize, Serialize};

use super::softmax::{train_softmax, Hyper, LabeledSet};
use crate::corpus::{Corpus, Example};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SeededRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub classes: usize,
    pub dim: usize,
    pub pivot_size: usize,
    pub pool_size: usize,
    pub test_size: usize,
    pub separation: f64,
    pub noise: f64,
    pub shift: f64,
    pub rare_class: Option<usize>,
    pub rare_pivot_prior: f64,
    pub rare_target_prior: f64,
    /// Accepted zero-shot accuracy range; `shift` is rescaled to land in it.
    pub band: Option<(f64, f64)>,
    /// Bucket width used to turn features into tokens.
    pub token_width: f64,
    pub hyper: Hyper,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            classes: 3,
            dim: 3,
            pivot_size: 150,
            pool_size: 200,
            test_size: 600,
            separation: 3.0,
            noise: 1.0,
            shift: 0.5,
            rare_class: Some(2),
            rare_pivot_prior: 0.0,
            rare_target_prior: 0.35,
            band: Some((0.4, 0.7)),
            token_width: 1.0,
            hyper: Hyper::default(),
        }
    }
}

/// Multipliers on `shift` tried, in order, when a band is requested.
const SHIFT_LADDER: [f64; 12] = [
    1.0, 0.75, 1.25, 0.5, 1.5, 0.25, 2.0, 0.0, 2.5, 3.0, 4.0, 6.0,
];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTask {
    pub classes: usize,
    pub pivot_train: LabeledSet,
    pub target_pool: LabeledSet,
    pub target_test: LabeledSet,
    /// Translation actually applied to the target domain.
    pub shift: f64,
    pub hyper: Hyper,
    pub token_width: f64,
}

impl TaskConfig {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Infeasible("need at least two classes".into()));
        }
        let regular = self.classes - usize::from(self.rare_class.is_some());
        let needed = regular.div_ceil(2) + usize::from(self.rare_class.is_some());
        if self.dim < needed.max(1) {
            return Err(Error::Infeasible(format!(
                "{} classes need at least {needed} feature dimensions",
                self.classes
            )));
        }
        if let Some(r) = self.rare_class {
            if r >= self.classes {
                return Err(Error::Infeasible(format!("rare class {r} out of range")));
            }
        }
        for p in [self.rare_pivot_prior, self.rare_target_prior] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Infeasible(
                    "rare-class priors must lie in [0, 1)".into(),
                ));
            }
        }
        if self.pivot_size == 0 || self.pool_size == 0 || self.test_size == 0 {
            return Err(Error::Infeasible("dataset sizes must be positive".into()));
        }
        if !(self.noise > 0.0 && self.token_width > 0.0) {
            return Err(Error::Infeasible(
                "noise and token width must be positive".into(),
            ));
        }
        if let Some((lo, hi)) = self.band {
            if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
                return Err(Error::Infeasible(format!("bad accuracy band ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    fn mean(&self, class: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        match self.rare_class {
            Some(r) if r == class => m[self.dim - 1] = self.separation,
            _ => {
                let slot = match self.rare_class {
                    Some(r) if class > r => class - 1,
                    _ => class,
                };
                let sign = if slot % 2 == 0 { -1.0 } else { 1.0 };
                m[slot / 2] = sign * self.separation;
            }
        }
        m
    }

    fn priors(&self, rare_prior: f64) -> Vec<f64> {
        match self.rare_class {
            None => vec![1.0; self.classes],
            Some(r) => {
                let rest = (1.0 - rare_prior) / (self.classes - 1) as f64;
                (0..self.classes)
                    .map(|c| if c == r { rare_prior } else { rest })
                    .collect()
            }
        }
    }

    fn sample(&self, n: usize, rare_prior: f64, shift: f64, rng: &mut SeededRng) -> LabeledSet {
        let priors = self.priors(rare_prior);
        let means: Vec<Vec<f64>> = (0..self.classes).map(|c| self.mean(c)).collect();
        let mut out = LabeledSet::default();
        for _ in 0..n {
            let y = rng.weighted_index(&priors).expect("priors sum to one");
            let x = means[y]
                .iter()
                .enumerate()
                .map(|(j, m)| m + if j == 0 { shift } else { 0.0 } + self.noise * rng.normal())
                .collect();
            out.push(x, y);
        }
        out
    }

    fn generate(&self, seed: u64, shift: f64) -> SyntheticTask {
        let mut pivot_rng = SeededRng::new(derive_seed(seed, 0));
        let mut pool_rng = SeededRng::new(derive_seed(seed, 1));
        let mut test_rng = SeededRng::new(derive_seed(seed, 2));
        SyntheticTask {
            classes: self.classes,
            pivot_train: self.sample(self.pivot_size, self.rare_pivot_prior, 0.0, &mut pivot_rng),
            target_pool: self.sample(self.pool_size, self.rare_target_prior, shift, &mut pool_rng),
            target_test: self.sample(self.test_size, self.rare_target_prior, shift, &mut test_rng),
            shift,
            hyper: self.hyper,
            token_width: self.token_width,
        }
    }
}

pub fn gen_synthetic(cfg: &TaskConfig, seed: u64) -> Result<SyntheticTask> {
    cfg.validate()?;
    let Some((lo, hi)) = cfg.band else {
        return Ok(cfg.generate(seed, cfg.shift));
    };
    let mut tried = Vec::new();
    for mult in SHIFT_LADDER {
        let task = cfg.generate(seed, cfg.shift * mult);
        let acc =
            train_softmax(&task.pivot_train, cfg.classes, cfg.hyper)?.accuracy(&task.target_test);
        if (lo..=hi).contains(&acc) {
            return Ok(task);
        }
        tried.push(format!("{:.2}->{acc:.3}", task.shift));
        if cfg.shift == 0.0 {
            break;
        }
    }
    Err(Error::Infeasible(format!(
        "zero-shot accuracy never reached [{lo}, {hi}] (shift->accuracy: {})",
        tried.join(", ")
    )))
}

impl SyntheticTask {
    /// Bucketed feature tokens, one per dimension, e.g. `d0:-2`.
    pub fn tokens(&self, x: &[f64]) -> Vec<String> {
        x.iter()
            .enumerate()
            .map(|(j, v)| format!("d{j}:{}", (v / self.token_width).floor() as i64))
            .collect()
    }

    /// The target pool as a corpus (ids are pool positions, labels attached).
    pub fn pool_corpus(&self) -> Result<Corpus> {
        let examples = self
            .target_pool
            .features
            .iter()
            .zip(&self.target_pool.labels)
            .enumerate()
            .map(|(i, (x, &y))| Example::new(i, self.tokens(x)).with_label(y as i64))
            .collect();
        Corpus::new(examples, false)
    }
}
