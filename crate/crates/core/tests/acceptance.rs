//! Acceptance checks, one printed PASS/FAIL line per criterion.
//!
//! Runs with its own `main` so the lines are visible under `cargo test`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fewsel::cluster::{kmeanspp_select, KppFirst};
use fewsel::dce::{select_dce, DceSign};
use fewsel::embeddings::gradient_embedding;
use fewsel::harness::{
    gen_synthetic, model_outputs, paired_ttest, run_fewshot, train_softmax, FewshotOptions,
    TaskConfig,
};
use fewsel::ngram::{train_lm, Vocab, DEFAULT_ORDER};
use fewsel::pe::token_entropy;
use fewsel::rng::SeededRng;
use fewsel::stats::median;
use fewsel::tensors::TokenDists;
use fewsel::{select, Corpus, Example, StrategySpec, TensorSet};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn normals(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

// 1 -------------------------------------------------------------------------

/// Cross-entropy against a fixed label for an output layer `w` (C x h,
/// row-major) and bias `b`.
fn head_loss(w: &[f64], b: &[f64], h: &[f64], label: usize) -> f64 {
    let c = b.len();
    let z: Vec<f64> = (0..c)
        .map(|i| {
            w[i * h.len()..(i + 1) * h.len()]
                .iter()
                .zip(h)
                .map(|(a, x)| a * x)
                .sum::<f64>()
                + b[i]
        })
        .collect();
    // log-sum-exp relative to the label logit keeps tiny losses precise
    let rest: f64 = z
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label)
        .map(|(_, v)| (v - z[label]).exp())
        .sum();
    rest.ln_1p()
}

/// Five-point central difference of `f` at `x[i]`.
fn stencil(x: &mut [f64], i: usize, eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    let mut at = |d: f64, x: &mut [f64]| {
        x[i] = orig + d;
        f(x)
    };
    let v = (-at(2.0 * eps, x) + 8.0 * at(eps, x) - 8.0 * at(-eps, x) + at(-2.0 * eps, x))
        / (12.0 * eps);
    x[i] = orig;
    v
}

fn gradient_closed_form() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(2024);
    let mut worst: f64 = 0.0;
    let eps = 1e-3;
    for draw in 0..100 {
        let c = [2, 7, 18][draw % 3];
        let hd = [4, 16][(draw / 3) % 2];
        let mut w = normals(&mut rng, c * hd);
        let mut b = normals(&mut rng, c);
        let h = normals(&mut rng, hd);
        let z: Vec<f64> = (0..c)
            .map(|i| {
                w[i * hd..(i + 1) * hd]
                    .iter()
                    .zip(&h)
                    .map(|(a, x)| a * x)
                    .sum::<f64>()
                    + b[i]
            })
            .collect();
        let p = softmax(&z);
        // the self-predicted label stays fixed while the weights move
        let label = p
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > p[best] { i } else { best });
        let mut fd = Vec::with_capacity(c * (hd + 1));
        for i in 0..w.len() {
            fd.push(stencil(&mut w, i, eps, |w| head_loss(w, &b, &h, label)));
        }
        for i in 0..c {
            fd.push(stencil(&mut b, i, eps, |b| head_loss(&w, b, &h, label)));
        }
        let g = gradient_embedding(&p, &h, true).map_err(|e| e.to_string())?;
        ensure(g.vec.len() == fd.len(), || {
            format!("draw {draw}: length {} vs {}", g.vec.len(), fd.len())
        })?;
        let diff: f64 = g
            .vec
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
    }
    ensure(worst < 1e-4, || format!("worst relative error {worst:.3e}"))?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("worst relative error {worst:.2e} in {took:.2?}"))
}

// 2 -------------------------------------------------------------------------

fn lm_fixture() -> Vec<Vec<String>> {
    let words = [
        "the", "a", "cat", "dog", "sat", "ran", "on", "mat", "fast", "slowly", "and", "it",
    ];
    let mut rng = SeededRng::new(7);
    (0..200)
        .map(|_| {
            let len = 1 + rng.below(9) as usize;
            (0..len)
                .map(|_| words[rng.below(words.len() as u64) as usize].to_string())
                .collect()
        })
        .collect()
}

fn ngram_normalization() -> Outcome {
    let sentences = lm_fixture();
    let vocab = Arc::new(Vocab::new(sentences.iter().flatten().cloned()));
    let model = train_lm(&sentences, DEFAULT_ORDER, vocab.clone()).map_err(|e| e.to_string())?;
    let ids: Vec<u32> = (0..vocab.len() as u32).collect();
    let contexts = model.contexts();
    let mut worst: f64 = 0.0;
    for ctx in &contexts {
        let total: f64 = ids.iter().map(|&w| model.prob(w, ctx)).sum();
        worst = worst.max((total - 1.0).abs());
    }
    ensure(worst <= 1e-9, || format!("worst |sum - 1| = {worst:.3e}"))?;

    let empty = train_lm::<String>(&[], DEFAULT_ORDER, vocab.clone()).map_err(|e| e.to_string())?;
    let expected = (vocab.len() as f64).log2();
    for s in sentences.iter().take(50) {
        let h = empty.sentence_entropy(s).map_err(|e| e.to_string())?;
        ensure(h == expected, || {
            format!("empty-model entropy {h} vs log2|V| = {expected}")
        })?;
    }
    Ok(format!(
        "{} contexts, worst |sum - 1| = {worst:.1e}",
        contexts.len()
    ))
}

// 3 -------------------------------------------------------------------------

/// A deliberately plain interpolated Witten-Bell trigram model over strings.
struct NaiveLm {
    order: usize,
    vocab_size: usize,
    counts: HashMap<Vec<String>, HashMap<String, f64>>,
}

impl NaiveLm {
    fn train(sentences: &[&Vec<String>], order: usize, vocab_size: usize) -> Self {
        let mut counts: HashMap<Vec<String>, HashMap<String, f64>> = HashMap::new();
        for s in sentences {
            let mut padded = vec!["<s>".to_string(); order - 1];
            padded.extend(s.iter().cloned());
            padded.push("</s>".to_string());
            for i in order - 1..padded.len() {
                for len in 0..order {
                    let ctx = padded[i - len..i].to_vec();
                    *counts
                        .entry(ctx)
                        .or_default()
                        .entry(padded[i].clone())
                        .or_default() += 1.0;
                }
            }
        }
        NaiveLm {
            order,
            vocab_size,
            counts,
        }
    }

    fn prob(&self, w: &str, ctx: &[String]) -> f64 {
        let lower = if ctx.is_empty() {
            1.0 / self.vocab_size as f64
        } else {
            self.prob(w, &ctx[1..])
        };
        match self.counts.get(ctx) {
            None => lower,
            Some(followers) => {
                let total: f64 = followers.values().sum();
                let types = followers.len() as f64;
                let c = followers.get(w).copied().unwrap_or(0.0);
                (c + types * lower) / (total + types)
            }
        }
    }

    fn entropy(&self, s: &[String]) -> f64 {
        let mut padded = vec!["<s>".to_string(); self.order - 1];
        padded.extend(s.iter().cloned());
        padded.push("</s>".to_string());
        let mut bits = 0.0;
        for i in self.order - 1..padded.len() {
            bits -= self.prob(&padded[i], &padded[i + 1 - self.order..i]).log2();
        }
        bits / (s.len() + 1) as f64
    }
}

fn brute_force_dce(sentences: &[Vec<String>], k: usize, g: usize, prose: bool) -> Vec<usize> {
    let mut vocab: Vec<&String> = sentences.iter().flatten().collect();
    vocab.sort();
    vocab.dedup();
    let vocab_size = vocab.len() + 3;
    let mut selected: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..sentences.len()).collect();
    while selected.len() < k && !remaining.is_empty() {
        let rest: Vec<&Vec<String>> = remaining.iter().map(|&i| &sentences[i]).collect();
        let lm_out = NaiveLm::train(&rest, 3, vocab_size);
        let h_out: Vec<f64> = rest.iter().map(|s| lm_out.entropy(s)).collect();
        let sum_out: f64 = h_out.iter().sum();
        let norm_in: Vec<f64> = if selected.is_empty() {
            vec![0.0; rest.len()]
        } else {
            let chosen: Vec<&Vec<String>> = selected.iter().map(|&i| &sentences[i]).collect();
            let lm_in = NaiveLm::train(&chosen, 3, vocab_size);
            let h_in: Vec<f64> = rest.iter().map(|s| lm_in.entropy(s)).collect();
            let sum_in: f64 = h_in.iter().sum();
            h_in.iter().map(|h| h / sum_in).collect()
        };
        let mut scored: Vec<(f64, usize)> = remaining
            .iter()
            .enumerate()
            .map(|(j, &id)| {
                let o = h_out[j] / sum_out;
                (
                    if prose {
                        norm_in[j] - o
                    } else {
                        o - norm_in[j]
                    },
                    id,
                )
            })
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for &(_, id) in scored.iter().take(g) {
            selected.push(id);
            remaining.retain(|&r| r != id);
        }
    }
    selected.truncate(k);
    selected
}

fn dce_oracle() -> Outcome {
    let raw = [
        "the cat sat on the mat",
        "the dog sat on the log",
        "stocks fell sharply in early trading",
        "the cat ran after the dog",
        "a bird flew away",
        "markets rallied after the early fall",
    ];
    let sentences: Vec<Vec<String>> = raw
        .iter()
        .map(|s| s.split_whitespace().map(String::from).collect())
        .collect();
    let corpus = Corpus::from_token_lists(&sentences).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for (sign, prose) in [(DceSign::Prose, true), (DceSign::Eq3, false)] {
        let got = select_dce(&corpus, 4, 2, DEFAULT_ORDER, sign).map_err(|e| e.to_string())?;
        let want = brute_force_dce(&sentences, 4, 2, prose);
        ensure(got.ids == want, || {
            format!("{sign}: got {:?}, oracle {want:?}", got.ids)
        })?;
        report.push(format!("{sign} {want:?}"));
    }
    Ok(report.join(", "))
}

// 4 -------------------------------------------------------------------------

fn kmeanspp_coverage() -> Outcome {
    let mut rng = SeededRng::new(11);
    let mut vectors = Vec::new();
    for cluster in 0..2 {
        for _ in 0..50 {
            // points in a disc of diameter 1; centers 100 apart
            let r = 0.5 * rng.next_f64().sqrt();
            let a = std::f64::consts::TAU * rng.next_f64();
            vectors.push(vec![
                100.0 * cluster as f64 + r * a.cos() + 1.0,
                r * a.sin() + 1.0,
            ]);
        }
    }
    let ids: Vec<usize> = (0..100).collect();
    for first in [KppFirst::Norm, KppFirst::Uniform] {
        for seed in 0..100 {
            let picks =
                kmeanspp_select(&ids, &vectors, 2, seed, first).map_err(|e| e.to_string())?;
            let sides: Vec<usize> = picks.iter().map(|&(id, _)| id / 50).collect();
            ensure(sides[0] != sides[1], || {
                format!("{first:?} seed {seed}: picks {picks:?}")
            })?;
        }
    }
    Ok("one pick per cluster for seeds 0-99, both first-pick rules".into())
}

// 5 -------------------------------------------------------------------------

fn pe_bounds() -> Outcome {
    let mut rng = SeededRng::new(5);
    for i in 0..10_000 {
        let c = 2 + rng.below(30) as usize;
        let spread = 0.1 + 5.0 * rng.next_f64();
        let z: Vec<f64> = (0..c).map(|_| spread * rng.normal()).collect();
        let p = softmax(&z);
        let e = token_entropy(&p).map_err(|e| e.to_string())?;
        let bound = (c as f64).ln();
        ensure(e >= 0.0 && e <= bound + 1e-12, || {
            format!("draw {i}: entropy {e} outside [0, {bound}]")
        })?;
    }
    for c in [2usize, 3, 7, 18, 100] {
        let mut one_hot = vec![0.0; c];
        one_hot[c / 2] = 1.0;
        let e = token_entropy(&one_hot).map_err(|e| e.to_string())?;
        ensure(e == 0.0, || format!("one-hot C = {c}: {e}"))?;
        let u = token_entropy(&vec![1.0 / c as f64; c]).map_err(|e| e.to_string())?;
        ensure((u - (c as f64).ln()).abs() < 1e-12, || {
            format!("uniform C = {c}: {u}")
        })?;
    }
    Ok("10000 draws in range, equality at one-hot and uniform".into())
}

// 6, 7 ----------------------------------------------------------------------

const SEEDS: u64 = 20;

fn simulation_specs() -> Vec<StrategySpec> {
    ["rand", "pe:lambda=1", "le"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

struct Simulation {
    report: fewsel::harness::DeltaReport,
    pool: usize,
    took: Duration,
}

fn simulate() -> Result<Simulation, String> {
    let cfg = TaskConfig::default();
    let seeds: Vec<u64> = (0..SEEDS).collect();
    let start = Instant::now();
    let report = run_fewshot(
        &cfg,
        &simulation_specs(),
        &[10, 50, 100, cfg.pool_size],
        &seeds,
        FewshotOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(Simulation {
        report,
        pool: cfg.pool_size,
        took: start.elapsed(),
    })
}

fn superiority(sim: &Simulation) -> Outcome {
    let r = &sim.report;
    let zero: Vec<f64> = r
        .runs
        .iter()
        .filter(|x| x.strategy == "rand" && x.k == 10)
        .map(|x| x.zero_shot)
        .collect();
    ensure(zero.len() == SEEDS as usize, || "missing seeds".into())?;
    ensure(zero.iter().all(|a| (0.4..=0.7).contains(a)), || {
        format!("zero-shot outside band: {zero:?}")
    })?;
    ensure(r.label_audit_clean, || {
        "a selection read pool labels".into()
    })?;
    let rand = r.deltas("rand", 10);
    let base = median(&rand).unwrap();
    let mut parts = vec![format!("RAND {base:+.4}")];
    for label in ["le", "pe(lambda=1)"] {
        let d = r.deltas(label, 10);
        let m = median(&d).unwrap();
        let t = paired_ttest(&d, &rand).map_err(|e| e.to_string())?;
        ensure(m > base && t.p < 0.1, || {
            format!("{label}: median {m:+.4} vs {base:+.4}, p = {:.4}", t.p)
        })?;
        parts.push(format!("{label} {m:+.4} (p = {:.1e})", t.p));
    }
    ensure(sim.took < Duration::from_secs(120), || {
        format!("took {:?}", sim.took)
    })?;
    Ok(format!(
        "median delta at k = 10: {}; {:.1?}",
        parts.join(", "),
        sim.took
    ))
}

fn saturation(sim: &Simulation) -> Outcome {
    let r = &sim.report;
    let mut medians = Vec::new();
    for k in [10, 50, 100, sim.pool] {
        let diffs: Vec<f64> = r
            .deltas("le", k)
            .iter()
            .zip(r.deltas("rand", k))
            .map(|(a, b)| a - b)
            .collect();
        if k == sim.pool {
            ensure(diffs.iter().all(|&d| d == 0.0), || {
                format!("nonzero gap at the full pool: {diffs:?}")
            })?;
        }
        medians.push(median(&diffs).unwrap());
    }
    ensure(medians.windows(2).all(|w| w[1] <= w[0]), || {
        format!("medians not non-increasing: {medians:?}")
    })?;
    let shown: Vec<String> = medians.iter().map(|m| format!("{m:+.4}")).collect();
    Ok(format!(
        "median LE - RAND over k = 10, 50, 100, pool: {}",
        shown.join(", ")
    ))
}

// 8 -------------------------------------------------------------------------

fn ttest_oracle() -> Outcome {
    let zeros = |n| vec![0.0; n];
    let cases: [(&str, Vec<f64>, f64, f64); 3] = {
        // df = 2: p = 1 - t / sqrt(2 + t^2)
        let t2 = 2.0 * 3f64.sqrt();
        // df = 1: p = 1 - (2 / pi) atan|t|
        let t1 = 2.0;
        [
            (
                "[1, 2, 3]",
                vec![1.0, 2.0, 3.0],
                t2,
                1.0 - t2 / (2.0 + t2 * t2).sqrt(),
            ),
            (
                "[1, 3]",
                vec![1.0, 3.0],
                t1,
                1.0 - 2.0 / std::f64::consts::PI * t1.atan(),
            ),
            (
                "sleep",
                vec![1.2, 2.4, 1.3, 1.3, 0.0, 1.0, 1.8, 0.8, 4.6, 1.4],
                4.062128,
                0.002832890,
            ),
        ]
    };
    let mut shown = Vec::new();
    for (name, diffs, t, p) in cases {
        let res = paired_ttest(&diffs, &zeros(diffs.len())).map_err(|e| e.to_string())?;
        ensure((res.t - t).abs() < 1e-4 && (res.p - p).abs() < 1e-4, || {
            format!("{name}: t = {}, p = {} (expected {t}, {p})", res.t, res.p)
        })?;
        shown.push(format!("{name}: t = {:.4}, p = {:.4}", res.t, res.p));
    }
    Ok(shown.join("; "))
}

// 9, 10 ---------------------------------------------------------------------

struct Fixture {
    name: &'static str,
    corpus: Corpus,
    tensors: TensorSet,
    specs: Vec<StrategySpec>,
}

fn classification_fixture() -> Result<Fixture, String> {
    let cfg = TaskConfig {
        pool_size: 60,
        ..TaskConfig::default()
    };
    let task = gen_synthetic(&cfg, 3).map_err(|e| e.to_string())?;
    let model =
        train_softmax(&task.pivot_train, task.classes, task.hyper).map_err(|e| e.to_string())?;
    let corpus = task.pool_corpus().map_err(|e| e.to_string())?;
    let tensors = model_outputs(&model, &corpus.ids(), &task.target_pool.features)
        .map_err(|e| e.to_string())?;
    let specs = [
        "rand",
        "dce",
        "dce:g=3+sign=eq3",
        "pe",
        "pe:lambda=1",
        "pe:lambda=-1",
        "ge",
        "ge:gamma=1",
        "ge:gamma=3",
        "ge:lambda=0.5",
        "le",
        "le:lambda=1",
    ];
    Ok(Fixture {
        name: "classification",
        corpus,
        tensors,
        specs: specs.iter().map(|s| s.parse().unwrap()).collect(),
    })
}

fn sequence_fixture() -> Result<Fixture, String> {
    let mut rng = SeededRng::new(99);
    let words = ["ana", "bi", "ce", "do", "el", "fa", "go", "hu"];
    let (classes, n) = (5, 50);
    let mut examples = Vec::new();
    let mut ids = Vec::new();
    let mut dists = Vec::new();
    let mut hidden = Vec::new();
    let mut sent = Vec::new();
    for i in 0..n {
        let id = 3 * i + 1;
        let len = 2 + rng.below(6) as usize;
        let tokens: Vec<String> = (0..len)
            .map(|_| words[rng.below(8) as usize].to_string())
            .collect();
        examples.push(Example::new(id, tokens).with_label((i % 4) as i64));
        let rows: Vec<Vec<f64>> = (0..len)
            .map(|_| {
                let scale = 3.0 * rng.next_f64();
                softmax(
                    &(0..classes)
                        .map(|_| scale * rng.normal())
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        ids.push(id);
        dists.push(TokenDists::from_rows(&rows).map_err(|e| e.to_string())?);
        hidden.push(normals(&mut rng, 6));
        sent.push(normals(&mut rng, 4));
    }
    let corpus = Corpus::new(examples, false).map_err(|e| e.to_string())?;
    let tensors = TensorSet::new(classes, 8, ids, Some(dists), Some(hidden), Some(sent))
        .map_err(|e| e.to_string())?;
    let specs = [
        "rand",
        "dce",
        "pe:lambda=1",
        "le",
        "le:lambda=0.5",
        "le:lambda=-1",
    ];
    Ok(Fixture {
        name: "sequence",
        corpus,
        tensors,
        specs: specs.iter().map(|s| s.parse().unwrap()).collect(),
    })
}

fn with_k(spec: &StrategySpec, k: usize, seed: u64) -> StrategySpec {
    let mut s = spec.clone();
    s.k = k;
    s.seed = seed;
    s
}

fn run_all(fx: &Fixture, corpus: &Corpus) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for spec in &fx.specs {
        for (k, seed) in [(10, 0), (7, 42)] {
            let sel = select(&with_k(spec, k, seed), corpus, Some(&fx.tensors))
                .map_err(|e| format!("{} {}: {e}", fx.name, spec.label()))?;
            out.push(sel.to_json());
        }
    }
    Ok(out)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

fn determinism(fixtures: &[Fixture]) -> Outcome {
    let mut checked = 0;
    for fx in fixtures {
        let one = in_pool(1, || run_all(fx, &fx.corpus))?;
        let eight = in_pool(8, || run_all(fx, &fx.corpus))?;
        ensure(one == eight, || {
            format!("{}: 1 vs 8 threads differ", fx.name)
        })?;
        for json in &one {
            let sel = fewsel::Selection::from_json(json).map_err(|e| e.to_string())?;
            let spec = StrategySpec::from_selection(&sel).map_err(|e| e.to_string())?;
            for threads in [1, 8] {
                let again = in_pool(threads, || select(&spec, &fx.corpus, Some(&fx.tensors)))
                    .map_err(|e| e.to_string())?;
                ensure(again.to_json() == *json, || {
                    format!(
                        "{}: re-run of {} at {threads} threads differs",
                        fx.name,
                        spec.label()
                    )
                })?;
            }
            checked += 1;
        }
    }
    let cfg = TaskConfig {
        pool_size: 40,
        test_size: 200,
        ..TaskConfig::default()
    };
    let sim = |threads| {
        in_pool(threads, || {
            run_fewshot(
                &cfg,
                &simulation_specs(),
                &[5],
                &[0, 1, 2, 3],
                FewshotOptions::default(),
            )
            .map(|r| serde_json::to_string(&r).unwrap())
        })
    };
    ensure(
        sim(1).map_err(|e| e.to_string())? == sim(8).map_err(|e| e.to_string())?,
        || "simulation reports differ between 1 and 8 threads".into(),
    )?;
    Ok(format!(
        "{checked} selections and a simulation report byte-identical at 1 and 8 threads"
    ))
}

fn label_obliviousness(fixtures: &[Fixture]) -> Outcome {
    let mut checked = 0;
    for fx in fixtures {
        let flipped = fx.corpus.map_labels(|l| 100 - l);
        let before = run_all(fx, &fx.corpus)?;
        let after = run_all(fx, &flipped)?;
        ensure(before == after, || {
            format!("{}: flipping labels changed a selection", fx.name)
        })?;
        ensure(
            !fx.corpus.label_audit_tripped() && !flipped.label_audit_tripped(),
            || format!("{}: a strategy read labels", fx.name),
        )?;
        checked += before.len();
    }
    Ok(format!(
        "{checked} selections unchanged under flipped labels"
    ))
}

fn main() {
    let fixtures: Result<Vec<Fixture>, String> =
        classification_fixture().and_then(|a| sequence_fixture().map(|b| vec![a, b]));
    let sim = simulate();
    let fixture_check = |f: fn(&[Fixture]) -> Outcome| match &fixtures {
        Ok(fx) => f(fx),
        Err(e) => Err(format!("fixture: {e}")),
    };
    let sim_check = |f: fn(&Simulation) -> Outcome| match &sim {
        Ok(s) => f(s),
        Err(e) => Err(format!("simulation: {e}")),
    };

    let results: BTreeMap<usize, (&str, Outcome)> = [
        (
            1,
            (
                "gradient embedding matches finite differences",
                gradient_closed_form(),
            ),
        ),
        (2, ("n-gram distributions normalize", ngram_normalization())),
        (3, ("DCE matches brute-force selection", dce_oracle())),
        (4, ("k-means++ covers both clusters", kmeanspp_coverage())),
        (5, ("predictive entropy bounds", pe_bounds())),
        (
            6,
            (
                "uncertainty strategies beat random at k = 10",
                sim_check(superiority),
            ),
        ),
        (
            7,
            ("gain over random saturates with k", sim_check(saturation)),
        ),
        (8, ("paired t-test fixtures", ttest_oracle())),
        (
            9,
            (
                "deterministic across re-runs and thread counts",
                fixture_check(determinism),
            ),
        ),
        (
            10,
            (
                "selection never reads labels",
                fixture_check(label_obliviousness),
            ),
        ),
    ]
    .into_iter()
    .collect();

    let mut failed = 0;
    for (n, (what, outcome)) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {what}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {what}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
