//! Target-language corpus: one JSON record per line.
//!
//! ```text
//! {"id": 0, "tokens": ["Das", "ist", "gut"], "text": "Das ist gut", "label": 2}
//! ```
//!
//! `text` and `label` are optional. Labels exist only in simulation data and
//! are sealed behind an audit flag: selection code has no reason to read them,
//! and any access through [`Corpus::label`] is recorded.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Record {
    id: usize,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: usize,
    pub tokens: Vec<String>,
    pub text: Option<String>,
    label: Option<i64>,
}

impl Example {
    pub fn new(id: usize, tokens: Vec<String>) -> Self {
        Example {
            id,
            tokens,
            text: None,
            label: None,
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn with_label(mut self, label: i64) -> Self {
        self.label = Some(label);
        self
    }

    pub fn has_label(&self) -> bool {
        self.label.is_some()
    }
}

/// Joins a hypothesis/premise pair into the single sentence used for
/// language modelling on pair tasks.
pub fn join_pair(hypothesis: &str, premise: &str) -> String {
    format!("{hypothesis}-{premise}")
}

#[derive(Debug)]
pub struct Corpus {
    examples: Vec<Example>,
    index: HashMap<usize, usize>,
    vocab: BTreeSet<String>,
    removed_duplicates: usize,
    duplicate_of: BTreeMap<usize, usize>,
    label_touched: AtomicBool,
}

impl Clone for Corpus {
    fn clone(&self) -> Self {
        Corpus {
            examples: self.examples.clone(),
            index: self.index.clone(),
            vocab: self.vocab.clone(),
            removed_duplicates: self.removed_duplicates,
            duplicate_of: self.duplicate_of.clone(),
            label_touched: AtomicBool::new(self.label_touched.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.examples == other.examples
    }
}

impl Corpus {
    /// Validates and orders `examples` by id. With `dedupe`, every example
    /// whose token sequence repeats an earlier one (in input order) is dropped.
    pub fn new(examples: Vec<Example>, dedupe: bool) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen_ids = BTreeSet::new();
        for ex in &examples {
            if !seen_ids.insert(ex.id) {
                return Err(Error::DuplicateId(ex.id));
            }
            if ex.tokens.is_empty() {
                return Err(Error::EmptyTokens(ex.id));
            }
        }

        let mut first_seen: HashMap<&[String], usize> = HashMap::new();
        let mut duplicate_of = BTreeMap::new();
        for ex in &examples {
            match first_seen.get(ex.tokens.as_slice()) {
                Some(&orig) => {
                    duplicate_of.insert(ex.id, orig);
                }
                None => {
                    first_seen.insert(&ex.tokens, ex.id);
                }
            }
        }

        let mut kept: Vec<Example> = if dedupe {
            examples
                .into_iter()
                .filter(|ex| !duplicate_of.contains_key(&ex.id))
                .collect()
        } else {
            examples
        };
        let removed = if dedupe { duplicate_of.len() } else { 0 };
        if dedupe {
            duplicate_of.clear();
        }
        if removed > 0 {
            log::info!("removed {removed} duplicate examples");
        }
        kept.sort_by_key(|ex| ex.id);

        let index = kept.iter().enumerate().map(|(i, ex)| (ex.id, i)).collect();
        let vocab = kept
            .iter()
            .flat_map(|ex| ex.tokens.iter().cloned())
            .collect();
        Ok(Corpus {
            examples: kept,
            index,
            vocab,
            removed_duplicates: removed,
            duplicate_of,
            label_touched: AtomicBool::new(false),
        })
    }

    pub fn from_token_lists<S: AsRef<str>>(sentences: &[Vec<S>]) -> Result<Self> {
        let examples = sentences
            .iter()
            .enumerate()
            .map(|(i, toks)| Example::new(i, toks.iter().map(|t| t.as_ref().to_string()).collect()))
            .collect();
        Corpus::new(examples, false)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Examples in ascending id order.
    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn ids(&self) -> Vec<usize> {
        self.examples.iter().map(|ex| ex.id).collect()
    }

    pub fn get(&self, id: usize) -> Option<&Example> {
        self.index.get(&id).map(|&i| &self.examples[i])
    }

    pub fn position(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.index.contains_key(&id)
    }

    /// Token types observed anywhere in the corpus.
    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn removed_duplicates(&self) -> usize {
        self.removed_duplicates
    }

    /// Duplicates left in place (dedupe off): duplicate id -> first id.
    pub fn duplicates(&self) -> &BTreeMap<usize, usize> {
        &self.duplicate_of
    }

    /// Reads a label and records the access in the audit flag.
    pub fn label(&self, id: usize) -> Option<i64> {
        self.label_touched.store(true, Ordering::SeqCst);
        self.get(id).and_then(|ex| ex.label)
    }

    /// Label read reserved for the simulation harness's reveal step.
    pub(crate) fn reveal_label(&self, id: usize) -> Option<i64> {
        self.get(id).and_then(|ex| ex.label)
    }

    pub fn label_audit_tripped(&self) -> bool {
        self.label_touched.load(Ordering::SeqCst)
    }

    /// Copy of the corpus with every label replaced by `f(label)`.
    pub fn map_labels(&self, f: impl Fn(i64) -> i64) -> Corpus {
        let mut out = self.clone();
        out.label_touched = AtomicBool::new(false);
        for ex in &mut out.examples {
            ex.label = ex.label.map(&f);
        }
        out
    }
}

pub fn load_corpus(path: impl AsRef<Path>, dedupe: bool) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), dedupe).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_corpus(reader: impl BufRead, dedupe: bool) -> Result<Corpus> {
    let mut examples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            msg: e.to_string(),
        })?;
        examples.push(Example {
            id: rec.id,
            tokens: rec.tokens,
            text: rec.text,
            label: rec.label,
        });
    }
    Corpus::new(examples, dedupe)
}

pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for ex in corpus.examples() {
        let rec = Record {
            id: ex.id,
            tokens: ex.tokens.clone(),
            text: ex.text.clone(),
            label: ex.label,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
