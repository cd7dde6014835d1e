//! Order-N backoff language model with interpolated Witten–Bell smoothing.
//!
//! For a context `h` with `c(h)` observed continuations of `T(h)` distinct types:
//!
//! ```text
//! p(w | h) = (c(h, w) + T(h) * p(w | h')) / (c(h) + T(h))
//! ```
//!
//! where `h'` drops the oldest token of `h`, and the empty context backs off to
//! the uniform distribution over the vocabulary. A context never seen in
//! training defers entirely to `p(w | h')`, so an untrained model is uniform.
//!
//! The vocabulary is fixed up front and shared between models, which keeps
//! entropies from models trained on different subsets on the same event space.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
pub const DEFAULT_ORDER: usize = 3;

/// Closed vocabulary: the given tokens plus `<s>`, `</s>` and `<unk>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set: std::collections::BTreeSet<String> =
            tokens.into_iter().map(Into::into).collect();
        for special in [BOS, EOS, UNK] {
            set.insert(special.to_string());
        }
        let tokens: Vec<String> = set.into_iter().collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Id of `token`, or of `<unk>` when out of vocabulary.
    pub fn id(&self, token: &str) -> u32 {
        self.index
            .get(token)
            .copied()
            .unwrap_or_else(|| self.index[UNK])
    }

    fn special(&self, token: &str) -> u32 {
        self.index[token]
    }

    pub fn encode<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<u32> {
        sentence.iter().map(|t| self.id(t.as_ref())).collect()
    }
}

#[derive(Clone, Debug, Default)]
struct ContextCounts {
    total: u64,
    followers: HashMap<u32, u64>,
}

#[derive(Clone, Debug)]
pub struct NgramModel {
    order: usize,
    vocab: Arc<Vocab>,
    /// `levels[j]` holds the contexts of length `j`.
    levels: Vec<HashMap<Vec<u32>, ContextCounts>>,
}

/// Trains a model on `sentences`; an empty input gives the uniform model.
pub fn train_lm<S: AsRef<str>>(
    sentences: &[Vec<S>],
    order: usize,
    vocab: Arc<Vocab>,
) -> Result<NgramModel> {
    let encoded: Vec<Vec<u32>> = sentences.iter().map(|s| vocab.encode(s)).collect();
    NgramModel::train_encoded(encoded.iter().map(Vec::as_slice), order, vocab)
}

impl NgramModel {
    pub fn train_encoded<'a>(
        sentences: impl IntoIterator<Item = &'a [u32]>,
        order: usize,
        vocab: Arc<Vocab>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParam(
                "n-gram order must be at least 1".into(),
            ));
        }
        let mut model = NgramModel {
            order,
            levels: vec![HashMap::new(); order],
            vocab,
        };
        let bos = model.vocab.special(BOS);
        let eos = model.vocab.special(EOS);
        let mut padded = Vec::new();
        for sentence in sentences {
            padded.clear();
            padded.resize(order - 1, bos);
            padded.extend_from_slice(sentence);
            padded.push(eos);
            for i in order - 1..padded.len() {
                let w = padded[i];
                for (j, level) in model.levels.iter_mut().enumerate() {
                    let ctx = &padded[i - j..i];
                    let counts = match level.get_mut(ctx) {
                        Some(c) => c,
                        None => level.entry(ctx.to_vec()).or_default(),
                    };
                    counts.total += 1;
                    *counts.followers.entry(w).or_insert(0) += 1;
                }
            }
        }
        Ok(model)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    /// Number of predicted events (tokens plus `</s>`) seen in training.
    pub fn total_tokens(&self) -> u64 {
        self.levels[0].get(&[][..]).map_or(0, |c| c.total)
    }

    /// Raw count of `w` following `context` (context given oldest first).
    pub fn count(&self, context: &[u32], w: u32) -> u64 {
        self.levels
            .get(context.len())
            .and_then(|l| l.get(context))
            .and_then(|c| c.followers.get(&w))
            .copied()
            .unwrap_or(0)
    }

    /// `p(w | context)`; contexts longer than `order - 1` are cut to their
    /// most recent tokens.
    pub fn prob(&self, w: u32, context: &[u32]) -> f64 {
        let keep = context.len().min(self.order - 1);
        self.prob_inner(w, &context[context.len() - keep..])
    }

    fn prob_inner(&self, w: u32, ctx: &[u32]) -> f64 {
        let lower = if ctx.is_empty() {
            1.0 / self.vocab.len() as f64
        } else {
            self.prob_inner(w, &ctx[1..])
        };
        match self.levels[ctx.len()].get(ctx) {
            None => lower,
            Some(cc) => {
                let c = cc.followers.get(&w).copied().unwrap_or(0) as f64;
                let types = cc.followers.len() as f64;
                (c + types * lower) / (cc.total as f64 + types)
            }
        }
    }

    /// Per-token entropy in bits over the tokens and the closing `</s>`.
    pub fn entropy_encoded(&self, sentence: &[u32]) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::InvalidParam("cannot score an empty sentence".into()));
        }
        let bos = self.vocab.special(BOS);
        let eos = self.vocab.special(EOS);
        let mut padded = vec![bos; self.order - 1];
        padded.extend_from_slice(sentence);
        padded.push(eos);
        let start = self.order - 1;
        // running mean: exact when every token costs the same
        let mut mean = 0.0;
        for (n, i) in (start..padded.len()).enumerate() {
            let bits = -self.prob_inner(padded[i], &padded[i - start..i]).log2();
            mean += (bits - mean) / (n + 1) as f64;
        }
        Ok(mean)
    }

    pub fn sentence_entropy<S: AsRef<str>>(&self, tokens: &[S]) -> Result<f64> {
        self.entropy_encoded(&self.vocab.encode(tokens))
    }

    /// Every context stored in the model, shortest first.
    pub fn contexts(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = self.levels.iter().flat_map(|l| l.keys().cloned()).collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }

    /// Sorted text dump of every observed (context, token) pair:
    /// `context<TAB>token<TAB>log2 p`, context tokens space-separated.
    pub fn dump(&self) -> String {
        let name = |id: u32| self.vocab.tokens[id as usize].as_str();
        let mut rows = BTreeMap::new();
        for level in &self.levels {
            for (ctx, cc) in level {
                let ctx_str = ctx.iter().map(|&t| name(t)).collect::<Vec<_>>().join(" ");
                for &w in cc.followers.keys() {
                    rows.insert(
                        (ctx_str.clone(), name(w).to_string()),
                        self.prob_inner(w, ctx).log2(),
                    );
                }
            }
        }
        let mut out = String::new();
        for ((ctx, w), lp) in rows {
            let _ = writeln!(out, "{ctx}\t{w}\t{lp:.6}");
        }
        out
    }
}
