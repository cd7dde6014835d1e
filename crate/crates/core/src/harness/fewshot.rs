//! Zero-shot vs few-shot comparison across strategies, budgets and seeds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::softmax::{model_outputs, train_softmax, LabeledSet, ToyModel};
use super::synthetic::{gen_synthetic, SyntheticTask, TaskConfig};
use crate::error::{Error, Result};
use crate::par;
use crate::stats::{median, paired_ttest};
use crate::strategies::{select, StrategyName, StrategySpec};

/// Number of RAND draws averaged per seed.
pub const RAND_DRAWS: u64 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FewshotOptions {
    /// Fine-tune the zero-shot model further instead of retraining from zero.
    pub continue_training: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: String,
    pub k: usize,
    pub seed: u64,
    pub zero_shot: f64,
    pub few_shot: f64,
    pub delta: f64,
    /// Selected pool ids (every draw, concatenated, for RAND).
    pub selected: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestRecord {
    pub t: f64,
    pub p: f64,
    pub df: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub k: usize,
    pub median_delta: f64,
    pub ttest_vs_rand: Option<TTestRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub strategies: Vec<String>,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Target shift used for each seed's task.
    pub shifts: Vec<f64>,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// True when no selection touched a pool label.
    pub label_audit_clean: bool,
}

impl DeltaReport {
    /// Per-seed deltas for one strategy label and budget, in seed order.
    pub fn deltas(&self, strategy: &str, k: usize) -> Vec<f64> {
        self.seeds
            .iter()
            .filter_map(|&s| {
                self.runs
                    .iter()
                    .find(|r| r.strategy == strategy && r.k == k && r.seed == s)
                    .map(|r| r.delta)
            })
            .collect()
    }

    pub fn median_delta(&self, strategy: &str, k: usize) -> Option<f64> {
        median(&self.deltas(strategy, k))
    }

    pub fn row(&self, strategy: &str, k: usize) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.strategy == strategy && r.k == k)
    }
}

struct Eval {
    correct: usize,
    total: usize,
}

fn retrain(
    task: &SyntheticTask,
    zero: &ToyModel,
    extra: &LabeledSet,
    opts: FewshotOptions,
) -> Result<ToyModel> {
    let mut data = task.pivot_train.clone();
    for (x, &y) in extra.features.iter().zip(&extra.labels) {
        data.push(x.clone(), y);
    }
    if opts.continue_training {
        let mut m = zero.clone();
        m.fit(&data)?;
        Ok(m)
    } else {
        train_softmax(&data, task.classes, task.hyper)
    }
}

/// Labels are revealed for the selected ids only, and the examples are
/// appended in ascending id order so the training set does not depend on
/// selection order.
fn reveal(
    task: &SyntheticTask,
    corpus: &crate::corpus::Corpus,
    ids: &[usize],
) -> Result<LabeledSet> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut out = LabeledSet::default();
    for id in sorted {
        let label = corpus
            .reveal_label(id)
            .ok_or_else(|| Error::InvalidParam(format!("pool example {id} has no label")))?;
        out.push(task.target_pool.features[id].clone(), label as usize);
    }
    Ok(out)
}

fn run_seed(
    task: &SyntheticTask,
    strategies: &[StrategySpec],
    ks: &[usize],
    seed: u64,
    opts: FewshotOptions,
) -> Result<(Vec<RunRecord>, bool)> {
    let zero = train_softmax(&task.pivot_train, task.classes, task.hyper)?;
    let test = &task.target_test;
    let zero_eval = Eval {
        correct: zero.correct(test),
        total: test.len(),
    };
    let zero_acc = zero_eval.correct as f64 / zero_eval.total as f64;
    let corpus = task.pool_corpus()?;
    let ids = corpus.ids();
    let tensors = model_outputs(&zero, &ids, &task.target_pool.features)?;

    let mut records = Vec::new();
    for spec in strategies {
        for &k in ks {
            let mut record = RunRecord {
                strategy: spec.label(),
                k,
                seed,
                zero_shot: zero_acc,
                few_shot: zero_acc,
                delta: 0.0,
                selected: Vec::new(),
            };
            if k == 0 {
                records.push(record);
                continue;
            }
            let draws: Vec<u64> = if spec.name == StrategyName::Rand {
                (0..RAND_DRAWS).map(|j| seed * RAND_DRAWS + j).collect()
            } else {
                vec![seed]
            };
            let mut few_correct = 0usize;
            for &draw_seed in &draws {
                let mut s = spec.clone();
                s.k = k;
                s.seed = draw_seed;
                let sel = select(&s, &corpus, Some(&tensors))?;
                let extra = reveal(task, &corpus, &sel.ids)?;
                few_correct += retrain(task, &zero, &extra, opts)?.correct(test);
                record.selected.extend(&sel.ids);
            }
            // exact integer numerators keep identical training sets at identical deltas
            let n_draws = draws.len();
            let denom = (n_draws * zero_eval.total) as f64;
            record.few_shot = few_correct as f64 / denom;
            record.delta = (few_correct as f64 - (n_draws * zero_eval.correct) as f64) / denom;
            records.push(record);
        }
    }
    Ok((records, !corpus.label_audit_tripped()))
}

/// Runs every strategy at every budget on one task per seed (task seed =
/// selection seed = `seed`) and summarizes medians and paired t-tests
/// against RAND.
pub fn run_fewshot(
    cfg: &TaskConfig,
    strategies: &[StrategySpec],
    ks: &[usize],
    seeds: &[u64],
    opts: FewshotOptions,
) -> Result<DeltaReport> {
    if let Some(&k) = ks.iter().find(|&&k| k > cfg.pool_size) {
        return Err(Error::InvalidParam(format!(
            "k = {k} exceeds the pool size {}",
            cfg.pool_size
        )));
    }
    for spec in strategies {
        spec.validate()?;
    }
    let outcomes = par::map(seeds, |&seed| -> Result<_> {
        let task = gen_synthetic(cfg, seed)?;
        let (records, clean) = run_seed(&task, strategies, ks, seed, opts)?;
        Ok((task.shift, records, clean))
    });

    let mut runs = Vec::new();
    let mut shifts = Vec::new();
    let mut clean = true;
    for outcome in outcomes {
        let (shift, records, c) = outcome?;
        shifts.push(shift);
        runs.extend(records);
        clean &= c;
    }
    let mut report = DeltaReport {
        strategies: strategies.iter().map(StrategySpec::label).collect(),
        ks: ks.to_vec(),
        seeds: seeds.to_vec(),
        shifts,
        runs,
        summary: Vec::new(),
        label_audit_clean: clean,
    };
    let rand_label = strategies
        .iter()
        .find(|s| s.name == StrategyName::Rand)
        .map(StrategySpec::label);
    for label in &report.strategies {
        for &k in ks {
            let d = report.deltas(label, k);
            let ttest_vs_rand = match &rand_label {
                Some(r) if r != label && d.len() >= 2 => {
                    let t = paired_ttest(&d, &report.deltas(r, k))?;
                    Some(TTestRecord {
                        t: t.t,
                        p: t.p,
                        df: t.df,
                    })
                }
                _ => None,
            };
            report.summary.push(SummaryRow {
                strategy: label.clone(),
                k,
                median_delta: median(&d).unwrap_or(0.0),
                ttest_vs_rand,
            });
        }
    }
    Ok(report)
}

/// Per-category mean of per-unit median deltas.
pub fn aggregate_deltas(
    deltas: &BTreeMap<String, Vec<f64>>,
    groups: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, f64>> {
    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for category in groups.values() {
        buckets.entry(category.clone()).or_default();
    }
    for (unit, values) in deltas {
        let category = groups
            .get(unit)
            .ok_or_else(|| Error::InvalidParam(format!("unit {unit:?} has no category")))?;
        let m = median(values)
            .ok_or_else(|| Error::InvalidParam(format!("unit {unit:?} has no deltas")))?;
        buckets.get_mut(category).expect("seeded above").push(m);
    }
    buckets
        .into_iter()
        .map(|(category, ms)| {
            if ms.is_empty() {
                Err(Error::InvalidParam(format!(
                    "category {category:?} is empty"
                )))
            } else {
                let mean = ms.iter().sum::<f64>() / ms.len() as f64;
                Ok((category, mean))
            }
        })
        .collect()
}

/// A named task (the analogue of one target language) and its category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub name: String,
    pub category: String,
    #[serde(default)]
    pub task: TaskConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub strategy: String,
    pub k: usize,
    pub category: String,
    pub mean_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitsReport {
    pub units: Vec<(Unit, DeltaReport)>,
    pub categories: Vec<CategoryRow>,
}

pub fn run_units(
    units: &[Unit],
    strategies: &[StrategySpec],
    ks: &[usize],
    seeds: &[u64],
    opts: FewshotOptions,
) -> Result<UnitsReport> {
    let mut reports = Vec::new();
    for unit in units {
        let report = run_fewshot(&unit.task, strategies, ks, seeds, opts)?;
        reports.push((unit.clone(), report));
    }
    let groups: BTreeMap<String, String> = units
        .iter()
        .map(|u| (u.name.clone(), u.category.clone()))
        .collect();
    let mut categories = Vec::new();
    for spec in strategies {
        let label = spec.label();
        for &k in ks {
            let deltas: BTreeMap<String, Vec<f64>> = reports
                .iter()
                .map(|(u, r)| (u.name.clone(), r.deltas(&label, k)))
                .collect();
            for (category, mean_delta) in aggregate_deltas(&deltas, &groups)? {
                categories.push(CategoryRow {
                    strategy: label.clone(),
                    k,
                    category,
                    mean_delta,
                });
            }
        }
    }
    Ok(UnitsReport {
        units: reports,
        categories,
    })
}
