use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Float(v)
    }
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Int(v as i64)
    }
}

impl From<bool> for Param {
    fn from(v: bool) -> Self {
        Param::Bool(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Str(v.to_string())
    }
}

/// Outcome of one selection run.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub strategy: String,
    pub k: usize,
    /// Size of the pool the ids were drawn from.
    pub n: usize,
    pub seed: u64,
    pub params: BTreeMap<String, Param>,
    pub ids: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Selection {
    pub fn new(strategy: impl Into<String>, k: usize, n: usize, seed: u64) -> Self {
        Selection {
            strategy: strategy.into(),
            k,
            n,
            seed,
            params: BTreeMap::new(),
            ids: Vec::new(),
            scores: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Param>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn push(&mut self, id: usize, score: f64) {
        self.ids.push(id);
        self.scores.push(score);
    }

    pub fn validate(&self) -> Result<()> {
        let want = self.k.min(self.n);
        if self.ids.len() != want {
            return Err(Error::InvalidParam(format!(
                "selection has {} ids, expected min(k, n) = {want}",
                self.ids.len()
            )));
        }
        if self.scores.len() != self.ids.len() {
            return Err(Error::InvalidParam(
                "scores and ids differ in length".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = self.ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::InvalidParam(format!("id {dup} selected twice")));
        }
        if self.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParam("non-finite score".into()));
        }
        Ok(())
    }

    /// Canonical JSON: sorted keys, floats with six decimals, one line.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\"ids\":[");
        join_into(&mut s, self.ids.iter().map(|id| id.to_string()));
        let _ = write!(s, "],\"k\":{},\"n\":{},\"params\":{{", self.k, self.n);
        join_into(
            &mut s,
            self.params
                .iter()
                .map(|(key, v)| format!("{}:{}", Value::from(key.as_str()), fmt_param(v))),
        );
        s.push_str("},\"scores\":[");
        join_into(&mut s, self.scores.iter().map(|v| fmt_float(*v)));
        let _ = write!(
            s,
            "],\"seed\":{},\"strategy\":{}}}",
            self.seed,
            Value::from(self.strategy.as_str())
        );
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Malformed {
            line: 1,
            msg: msg.to_string(),
        };
        let v: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
        let uint = |key: &str| {
            v.get(key)
                .and_then(Value::as_u64)
                .ok_or_else(|| bad(&format!("missing integer {key:?}")))
        };
        let strategy = v
            .get("strategy")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing strategy"))?
            .to_string();
        let ids = v
            .get("ids")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing ids"))?
            .iter()
            .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| bad("bad id")))
            .collect::<Result<Vec<_>>>()?;
        let scores = v
            .get("scores")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing scores"))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad("bad score")))
            .collect::<Result<Vec<_>>>()?;
        let mut params = BTreeMap::new();
        if let Some(obj) = v.get("params").and_then(Value::as_object) {
            for (key, p) in obj {
                let param = match p {
                    Value::Bool(b) => Param::Bool(*b),
                    Value::String(s) => Param::Str(s.clone()),
                    Value::Number(n) if n.is_i64() => Param::Int(n.as_i64().unwrap()),
                    Value::Number(n) => Param::Float(n.as_f64().unwrap()),
                    _ => return Err(bad("unsupported param value")),
                };
                params.insert(key.clone(), param);
            }
        }
        Ok(Selection {
            strategy,
            k: uint("k")? as usize,
            n: uint("n")? as usize,
            seed: uint("seed")?,
            params,
            ids,
            scores,
        })
    }
}

fn join_into(s: &mut String, items: impl Iterator<Item = String>) {
    for (i, item) in items.enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&item);
    }
}

pub(crate) fn fmt_float(v: f64) -> String {
    let s = format!("{v:.6}");
    // avoid "-0.000000"
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn fmt_param(p: &Param) -> String {
    match p {
        Param::Int(i) => i.to_string(),
        Param::Float(f) => fmt_float(*f),
        Param::Bool(b) => b.to_string(),
        Param::Str(s) => Value::from(s.as_str()).to_string(),
    }
}

/// Writes `contents` to a sibling temp file and renames it over `path`, so a
/// failed write never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParam(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_selection(selection: &Selection, path: impl AsRef<Path>) -> Result<()> {
    selection.validate()?;
    write_atomic(path.as_ref(), selection.to_json().as_bytes())
}

pub fn load_selection(path: impl AsRef<Path>) -> Result<Selection> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Selection::from_json(&text)
}
