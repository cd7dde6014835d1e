//! Data cross-entropy selection.
//!
//! Each round trains one language model on the already-selected sentences and
//! one on the remainder, scores every remaining sentence by the difference of
//! its length-normalized entropies under the two models (each normalized by
//! the corpus-wide total over the remainder), and moves the best `g` sentences
//! into the selected set.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::ngram::{NgramModel, Vocab};
use crate::par;
use crate::selection::Selection;

pub const DEFAULT_BATCH: usize = 10;

/// Direction of the cross-entropy difference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DceSign {
    /// `norm_I - norm_O`: prefer sentences surprising to the selected-set
    /// model and typical of the remainder.
    #[default]
    Prose,
    /// `norm_O - norm_I`, the difference taken in the opposite order.
    Eq3,
}

impl fmt::Display for DceSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DceSign::Prose => "prose",
            DceSign::Eq3 => "eq3",
        })
    }
}

impl FromStr for DceSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prose" => Ok(DceSign::Prose),
            "eq3" => Ok(DceSign::Eq3),
            _ => Err(Error::InvalidParam(format!("unknown DCE sign {s:?}"))),
        }
    }
}

/// Scores aligned with the remaining set. `h_in` is `None` while nothing has
/// been selected; the selected-set term is then zero for every sentence.
pub fn dce_scores(h_in: Option<&[f64]>, h_out: &[f64], sign: DceSign) -> Result<Vec<f64>> {
    let total_out: f64 = h_out.iter().sum();
    if total_out.is_nan() || total_out <= 0.0 {
        return Err(Error::Degenerate(
            "all remaining sentences have zero entropy".into(),
        ));
    }
    let norm_in: Vec<f64> = match h_in {
        None => vec![0.0; h_out.len()],
        Some(h) => {
            if h.len() != h_out.len() {
                return Err(Error::ShapeMismatch("h_in and h_out lengths differ".into()));
            }
            let total_in: f64 = h.iter().sum();
            if total_in.is_nan() || total_in <= 0.0 {
                return Err(Error::Degenerate(
                    "selected-set entropies sum to zero".into(),
                ));
            }
            h.iter().map(|x| x / total_in).collect()
        }
    };
    Ok(h_out
        .iter()
        .zip(norm_in)
        .map(|(o, i)| {
            let o = o / total_out;
            match sign {
                DceSign::Prose => i - o,
                DceSign::Eq3 => o - i,
            }
        })
        .collect())
}

/// Descending score, then ascending id.
pub(crate) fn by_score_desc(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Selected/remaining partition carried between rounds.
#[derive(Debug)]
pub struct DceState {
    pub l_in: Vec<usize>,
    pub l_out: BTreeSet<usize>,
    pub scores: Vec<f64>,
    g: usize,
    k: usize,
    order: usize,
    sign: DceSign,
    vocab: Arc<Vocab>,
    encoded: Vec<Vec<u32>>,
    corpus_ids: Vec<usize>,
}

impl DceState {
    pub fn new(corpus: &Corpus, k: usize, g: usize, order: usize, sign: DceSign) -> Result<Self> {
        if k == 0 || g == 0 {
            return Err(Error::InvalidParam("DCE needs k >= 1 and g >= 1".into()));
        }
        let vocab = Arc::new(Vocab::new(corpus.vocab().iter().cloned()));
        let encoded = corpus
            .examples()
            .iter()
            .map(|ex| vocab.encode(&ex.tokens))
            .collect();
        Ok(DceState {
            l_in: Vec::new(),
            l_out: corpus.ids().into_iter().collect(),
            scores: Vec::new(),
            g,
            k,
            order,
            sign,
            vocab,
            encoded,
            corpus_ids: corpus.ids(),
        })
    }

    pub fn is_done(&self) -> bool {
        self.l_in.len() >= self.k || self.l_out.is_empty()
    }

    fn sentence(&self, id: usize) -> &[u32] {
        let pos = self.corpus_ids.binary_search(&id).expect("id from corpus");
        &self.encoded[pos]
    }

    /// Runs one round and returns the `(id, score)` pairs moved into `l_in`.
    pub fn step(&mut self) -> Result<Vec<(usize, f64)>> {
        let out_ids: Vec<usize> = self.l_out.iter().copied().collect();
        let m_out = NgramModel::train_encoded(
            out_ids.iter().map(|&id| self.sentence(id)),
            self.order,
            self.vocab.clone(),
        )?;
        let h_out = par::map(&out_ids, |&id| m_out.entropy_encoded(self.sentence(id)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let h_in = if self.l_in.is_empty() {
            None
        } else {
            let m_in = NgramModel::train_encoded(
                self.l_in.iter().map(|&id| self.sentence(id)),
                self.order,
                self.vocab.clone(),
            )?;
            Some(
                par::map(&out_ids, |&id| m_in.entropy_encoded(self.sentence(id)))
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        let scores = dce_scores(h_in.as_deref(), &h_out, self.sign)?;
        let mut ranked: Vec<(usize, f64)> = out_ids.into_iter().zip(scores).collect();
        ranked.sort_by(by_score_desc);
        ranked.truncate(self.g);
        for &(id, score) in &ranked {
            self.l_out.remove(&id);
            self.l_in.push(id);
            self.scores.push(score);
        }
        Ok(ranked)
    }
}

pub fn select_dce(
    corpus: &Corpus,
    k: usize,
    g: usize,
    order: usize,
    sign: DceSign,
) -> Result<Selection> {
    if k > corpus.len() {
        log::warn!(
            "k = {k} exceeds corpus size {}; selecting every example",
            corpus.len()
        );
    }
    let mut state = DceState::new(corpus, k, g, order, sign)?;
    while !state.is_done() {
        state.step()?;
    }
    let mut sel = Selection::new("dce", k, corpus.len(), 0)
        .param("g", g)
        .param("order", order)
        .param("sign", sign.to_string().as_str());
    for (&id, &score) in state.l_in.iter().zip(&state.scores).take(k) {
        sel.push(id, score);
    }
    Ok(sel)
}
