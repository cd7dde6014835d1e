use std::fs;
use std::path::Path;
use std::sync::Arc;

use fewsel::cluster::KppFirst;
use fewsel::dce::DceSign;
use fewsel::harness::{run_fewshot, run_units, FewshotOptions, TaskConfig, Unit};
use fewsel::ngram::{train_lm, Vocab};
use fewsel::selection::write_atomic;
use fewsel::strategies::{score_table, ScoreKind};
use fewsel::{
    load_corpus, load_tensors, select, write_selection, Corpus, StrategyName, StrategySpec,
    TensorSet,
};
use thiserror::Error;

use crate::args::{
    Command, FirstPick, InputArgs, ScoreArgs, ScoreWhat, SelectArgs, Sign, SimulateArgs,
    StatsCommand, Strategy, TtestArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fewsel::Error),
    #[error("{0}")]
    Internal(String),
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Select(a) => run_select(a),
        Command::Score(a) => run_score(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Stats(StatsCommand::Ttest(a)) => run_ttest(a),
    }
}

fn spec_from(a: &SelectArgs) -> Result<StrategySpec> {
    let name = match a.strategy {
        Strategy::Rand => StrategyName::Rand,
        Strategy::Dce => StrategyName::Dce,
        Strategy::Pe => StrategyName::Pe,
        Strategy::Ge => StrategyName::Ge,
        Strategy::Le => StrategyName::Le,
    };
    let mut spec = StrategySpec::new(name, a.k, a.seed);
    if let Some(l) = a.lambda {
        spec = spec.lambda(l);
    }
    spec.gamma = a.gamma;
    spec.g = a.dce_g;
    spec.ngram_order = a.ngram_order;
    spec.dce_sign = match a.dce_sign {
        Sign::Prose => DceSign::Prose,
        Sign::Eq3 => DceSign::Eq3,
    };
    spec.kpp_first = match a.kpp_first {
        FirstPick::Norm => KppFirst::Norm,
        FirstPick::Uniform => KppFirst::Uniform,
    };
    if a.ge_no_bias {
        if name != StrategyName::Ge && name != StrategyName::Le {
            return Err(CliError::Usage("--ge-no-bias applies to GE only".into()));
        }
        spec.ge_bias = false;
    }
    if name != StrategyName::Dce && (a.dce_sign != Sign::Prose || a.ngram_order != 3) {
        return Err(CliError::Usage(
            "--dce-sign and --ngram-order apply to DCE only".into(),
        ));
    }
    if matches!(
        name,
        StrategyName::Rand | StrategyName::Dce | StrategyName::Pe
    ) && a.kpp_first != FirstPick::Norm
    {
        return Err(CliError::Usage(
            "--kpp-first applies to GE and LE only".into(),
        ));
    }
    spec.validate()?;
    Ok(spec)
}

fn load_inputs(input: &InputArgs, need_tensors: bool) -> Result<(Corpus, Option<TensorSet>)> {
    let corpus = load_corpus(&input.corpus, !input.keep_duplicates)?;
    let tensors = match &input.tensors {
        Some(p) => Some(load_tensors(p, &corpus)?),
        None if need_tensors => {
            return Err(CliError::Usage("this command needs --tensors".into()));
        }
        None => None,
    };
    Ok((corpus, tensors))
}

fn run_select(a: SelectArgs) -> Result<()> {
    // every flag is checked before any file is touched
    let spec = spec_from(&a)?;
    let (corpus, tensors) = load_inputs(&a.input, false)?;
    let sel = select(&spec, &corpus, tensors.as_ref())?;
    write_selection(&sel, &a.out)?;
    log::info!("wrote {} ids to {}", sel.ids.len(), a.out.display());
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_score(a: ScoreArgs) -> Result<()> {
    let kind = match a.what {
        ScoreWhat::LmDump => {
            if a.input.tensors.is_some() {
                log::warn!("lm-dump ignores --tensors");
            }
            let corpus = load_corpus(&a.input.corpus, !a.input.keep_duplicates)?;
            let sentences: Vec<Vec<String>> =
                corpus.examples().iter().map(|e| e.tokens.clone()).collect();
            let vocab = Arc::new(Vocab::new(corpus.vocab().iter().cloned()));
            let model = train_lm(&sentences, a.ngram_order, vocab)?;
            return emit(a.out.as_deref(), &model.dump());
        }
        ScoreWhat::Pe => ScoreKind::Pe,
        ScoreWhat::GeNorm => ScoreKind::GeNorm,
        ScoreWhat::LeNorm => ScoreKind::LeNorm,
    };
    let (corpus, tensors) = load_inputs(&a.input, true)?;
    let table = score_table(
        kind,
        &corpus,
        tensors.as_ref().expect("required"),
        !a.ge_no_bias,
    )?;
    let mut text = serde_json::to_string(&table).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

/// `A..B` (inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || CliError::Usage(format!("bad seed list {s:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_ks(s: &str, pool: usize) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| match p.trim() {
            "pool" => Ok(pool),
            v => v
                .parse()
                .map_err(|_| CliError::Usage(format!("bad budget {v:?}"))),
        })
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

enum SimConfig {
    Single(TaskConfig),
    Units(Vec<Unit>),
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let strategies: Vec<StrategySpec> = a
        .strategies
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<fewsel::Result<_>>()?;
    let seeds = parse_seeds(&a.seeds)?;
    let opts = FewshotOptions {
        continue_training: a.continue_training,
    };
    let config = match &a.config {
        None => SimConfig::Single(TaskConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| fewsel::Error::Io {
                path: p.clone(),
                source,
            })?;
            if text.trim_start().starts_with('[') {
                SimConfig::Units(read_json(p, &text)?)
            } else {
                SimConfig::Single(read_json(p, &text)?)
            }
        }
    };
    let json = match config {
        SimConfig::Single(cfg) => {
            let ks = parse_ks(&a.ks, cfg.pool_size)?;
            serde_json::to_string(&run_fewshot(&cfg, &strategies, &ks, &seeds, opts)?)
        }
        SimConfig::Units(units) => {
            if units.is_empty() {
                return Err(CliError::Usage("the unit list is empty".into()));
            }
            let pool = units
                .iter()
                .map(|u| u.task.pool_size)
                .min()
                .expect("non-empty");
            let ks = parse_ks(&a.ks, pool)?;
            serde_json::to_string(&run_units(&units, &strategies, &ks, &seeds, opts)?)
        }
    }
    .map_err(|e| CliError::Internal(e.to_string()))?;
    write_atomic(&a.out, format!("{json}\n").as_bytes())?;
    log::info!("wrote report to {}", a.out.display());
    Ok(())
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    let text = if Path::new(s).is_file() {
        fs::read_to_string(s).map_err(|e| {
            CliError::Core(fewsel::Error::Io {
                path: s.into(),
                source: e,
            })
        })?
    } else {
        s.to_string()
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| CliError::Usage(format!("not a number: {p:?}")))
        })
        .collect()
}

fn run_ttest(a: TtestArgs) -> Result<()> {
    let xs = parse_values(&a.a)?;
    let ys = parse_values(&a.b)?;
    let t = fewsel::harness::paired_ttest(&xs, &ys)?;
    println!(
        "{}",
        serde_json::json!({ "t": t.t, "p": t.p, "df": t.df, "n": xs.len() })
    );
    Ok(())
}
