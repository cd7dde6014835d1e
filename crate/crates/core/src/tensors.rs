//! Model outputs consumed by the selection strategies.
//!
//! Binary container (all integers u32, all values f32, little-endian):
//!
//! ```text
//! "FSELTNS1"
//! classes  max_len  count  flags  hidden_dim  sent_dim
//! count x (id, n_rows)                     -- strictly ascending ids
//! token distributions, n_rows x classes per entry, in index order   (flags & 1)
//! hidden vectors, count x hidden_dim                                  (flags & 2)
//! sentence embeddings, count x sent_dim                               (flags & 4)
//! ```
//!
//! Small fixtures may use the text form instead:
//!
//! ```text
//! fseltns-text classes=2 max_len=128
//! dist 0 0.5 0.5        # one line per token row
//! hidden 0 0.1 -0.3
//! sent 0 1.0 0.0
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FSELTNS1";
pub const TEXT_HEADER: &str = "fseltns-text";
pub const DEFAULT_MAX_LEN: usize = 128;
pub const ROW_TOLERANCE: f64 = 1e-6;

const FLAG_DISTS: u32 = 1;
const FLAG_HIDDEN: u32 = 2;
const FLAG_SENT: u32 = 4;

/// Row-major `[n_tokens x classes]` matrix of class probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenDists {
    classes: usize,
    data: Vec<f64>,
}

impl TokenDists {
    pub fn new(classes: usize, data: Vec<f64>) -> Result<Self> {
        if classes == 0 || !data.len().is_multiple_of(classes) {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not form rows of {classes} classes",
                data.len()
            )));
        }
        Ok(TokenDists { classes, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != classes) {
            return Err(Error::ShapeMismatch("ragged distribution rows".into()));
        }
        TokenDists::new(classes, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.classes
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.classes..(i + 1) * self.classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.classes)
    }
}

/// Checks that `row` is a probability vector within [`ROW_TOLERANCE`].
pub fn check_row(row: &[f64]) -> std::result::Result<(), f64> {
    let sum: f64 = row.iter().sum();
    if row.iter().all(|&p| p.is_finite() && p >= 0.0) && (sum - 1.0).abs() <= ROW_TOLERANCE {
        Ok(())
    } else {
        Err(sum)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorSet {
    classes: usize,
    max_len: usize,
    ids: Vec<usize>,
    token_dists: Option<Vec<TokenDists>>,
    hidden: Option<Vec<Vec<f64>>>,
    sent_embed: Option<Vec<Vec<f64>>>,
}

impl TensorSet {
    /// Assembles a tensor set from arrays aligned with `ids`; checks shapes
    /// and normalization but not corpus membership (see [`TensorSet::validate`]).
    pub fn new(
        classes: usize,
        max_len: usize,
        ids: Vec<usize>,
        token_dists: Option<Vec<TokenDists>>,
        hidden: Option<Vec<Vec<f64>>>,
        sent_embed: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by_key(|&i| ids[i]);
        for w in order.windows(2) {
            if ids[w[0]] == ids[w[1]] {
                return Err(Error::DuplicateId(ids[w[0]]));
            }
        }
        let check_len = |name: &str, n: usize| {
            if n != ids.len() {
                Err(Error::ShapeMismatch(format!(
                    "{name} has {n} entries for {} ids",
                    ids.len()
                )))
            } else {
                Ok(())
            }
        };
        if let Some(d) = &token_dists {
            check_len("token_dists", d.len())?;
        }
        if let Some(h) = &hidden {
            check_len("hidden", h.len())?;
        }
        if let Some(s) = &sent_embed {
            check_len("sent_embed", s.len())?;
        }
        let sorted_ids = order.iter().map(|&i| ids[i]).collect();
        let ts = TensorSet {
            classes,
            max_len,
            ids: sorted_ids,
            token_dists: token_dists.map(|v| permute(v, &order)),
            hidden: hidden.map(|v| permute(v, &order)),
            sent_embed: sent_embed.map(|v| permute(v, &order)),
        };
        ts.check_shapes()?;
        Ok(ts)
    }

    fn check_shapes(&self) -> Result<()> {
        if let Some(dists) = &self.token_dists {
            if self.classes == 0 {
                return Err(Error::ShapeMismatch("zero classes".into()));
            }
            for (&id, d) in self.ids.iter().zip(dists) {
                if d.classes() != self.classes {
                    return Err(Error::ShapeMismatch(format!(
                        "example {id}: {} classes, expected {}",
                        d.classes(),
                        self.classes
                    )));
                }
                if d.n_rows() == 0 {
                    return Err(Error::ShapeMismatch(format!("example {id}: no token rows")));
                }
                if d.n_rows() > self.max_len {
                    return Err(Error::ShapeMismatch(format!(
                        "example {id}: {} tokens exceed max length {}",
                        d.n_rows(),
                        self.max_len
                    )));
                }
                for (row, r) in d.rows().enumerate() {
                    check_row(r).map_err(|sum| Error::RowNotNormalized { id, row, sum })?;
                }
            }
        }
        for (name, arr) in [("hidden", &self.hidden), ("sent_embed", &self.sent_embed)] {
            if let Some(vs) = arr {
                let dim = vs.first().map_or(0, Vec::len);
                for (&id, v) in self.ids.iter().zip(vs) {
                    if v.len() != dim {
                        return Err(Error::ShapeMismatch(format!(
                            "example {id}: {name} has dimension {}, expected {dim}",
                            v.len()
                        )));
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::ShapeMismatch(format!(
                            "example {id}: non-finite {name} value"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Cross-checks ids and token counts against the corpus. A distribution
    /// matrix must have one row (classification) or one row per token.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        for (pos, &id) in self.ids.iter().enumerate() {
            let ex = corpus.get(id).ok_or(Error::UnknownId(id))?;
            if let Some(dists) = &self.token_dists {
                let rows = dists[pos].n_rows();
                if rows != 1 && rows != ex.tokens.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "example {id}: {rows} distribution rows for {} tokens",
                        ex.tokens.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Fails unless `array` is present for every corpus example.
    pub fn require(&self, corpus: &Corpus, strategy: &'static str, array: Array) -> Result<()> {
        let present = match array {
            Array::TokenDists => self.token_dists.is_some(),
            Array::Hidden => self.hidden.is_some(),
            Array::SentEmbed => self.sent_embed.is_some(),
        };
        if !present {
            return Err(Error::MissingTensor {
                strategy,
                array: array.name(),
            });
        }
        if let Some(missing) = corpus.ids().into_iter().find(|&id| self.pos(id).is_none()) {
            return Err(Error::ShapeMismatch(format!(
                "{} missing for example {missing}",
                array.name()
            )));
        }
        Ok(())
    }

    fn pos(&self, id: usize) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn has(&self, array: Array) -> bool {
        match array {
            Array::TokenDists => self.token_dists.is_some(),
            Array::Hidden => self.hidden.is_some(),
            Array::SentEmbed => self.sent_embed.is_some(),
        }
    }

    pub fn dists(&self, id: usize) -> Option<&TokenDists> {
        let p = self.pos(id)?;
        self.token_dists.as_ref().map(|d| &d[p])
    }

    pub fn hidden(&self, id: usize) -> Option<&[f64]> {
        let p = self.pos(id)?;
        self.hidden.as_ref().map(|h| h[p].as_slice())
    }

    pub fn sent_embed(&self, id: usize) -> Option<&[f64]> {
        let p = self.pos(id)?;
        self.sent_embed.as_ref().map(|s| s[p].as_slice())
    }

    /// True when every distribution matrix has a single row.
    pub fn is_classification(&self) -> bool {
        self.token_dists
            .as_ref()
            .is_some_and(|d| d.iter().all(|m| m.n_rows() == 1))
    }

    fn dim(arr: &Option<Vec<Vec<f64>>>) -> usize {
        arr.as_ref().and_then(|v| v.first()).map_or(0, Vec::len)
    }
}

fn permute<T>(v: Vec<T>, order: &[usize]) -> Vec<T> {
    let mut slots: Vec<Option<T>> = v.into_iter().map(Some).collect();
    order.iter().map(|&i| slots[i].take().unwrap()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Array {
    TokenDists,
    Hidden,
    SentEmbed,
}

impl Array {
    pub fn name(self) -> &'static str {
        match self {
            Array::TokenDists => "token_dists",
            Array::Hidden => "hidden",
            Array::SentEmbed => "sent_embed",
        }
    }
}

pub fn load_tensors(path: impl AsRef<Path>, corpus: &Corpus) -> Result<TensorSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ts = decode_tensors(&bytes)?;
    ts.validate(corpus)?;
    Ok(ts)
}

/// Decodes either container form, dispatching on the leading bytes.
pub fn decode_tensors(bytes: &[u8]) -> Result<TensorSet> {
    if bytes.starts_with(MAGIC) {
        read_binary(bytes)
    } else if bytes.starts_with(TEXT_HEADER.as_bytes()) {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::BadTensorFile("text container is not UTF-8".into()))?;
        read_text(text)
    } else {
        Err(Error::BadTensorFile("unrecognized header".into()))
    }
}

fn read_binary(bytes: &[u8]) -> Result<TensorSet> {
    let truncated = |_| Error::BadTensorFile("truncated container".into());
    let mut r = Cursor::new(&bytes[MAGIC.len()..]);
    let mut u32s = [0u32; 6];
    for v in &mut u32s {
        *v = r.read_u32::<LittleEndian>().map_err(truncated)?;
    }
    let [classes, max_len, count, flags, hdim, edim] = u32s.map(|v| v as usize);
    let flags = flags as u32;
    if flags & !(FLAG_DISTS | FLAG_HIDDEN | FLAG_SENT) != 0 {
        return Err(Error::BadTensorFile(format!("unknown flags {flags:#x}")));
    }

    let mut ids = Vec::with_capacity(count);
    let mut n_rows = Vec::with_capacity(count);
    for _ in 0..count {
        let id = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let rows = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        if ids.last().is_some_and(|&prev| prev >= id) {
            return Err(Error::BadTensorFile(format!(
                "index not strictly ascending at id {id}"
            )));
        }
        ids.push(id);
        n_rows.push(rows);
    }

    let mut read_f32s = |n: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0f32; n];
        r.read_f32_into::<LittleEndian>(&mut buf)
            .map_err(truncated)?;
        Ok(buf.into_iter().map(f64::from).collect())
    };

    let token_dists = if flags & FLAG_DISTS != 0 {
        let mut out = Vec::with_capacity(count);
        for &rows in &n_rows {
            out.push(TokenDists::new(classes, read_f32s(rows * classes)?)?);
        }
        Some(out)
    } else {
        None
    };
    let mut read_vectors = |flag: u32, dim: usize| -> Result<Option<Vec<Vec<f64>>>> {
        if flags & flag == 0 {
            return Ok(None);
        }
        let flat = read_f32s(count * dim)?;
        Ok(Some(if dim == 0 {
            vec![Vec::new(); count]
        } else {
            flat.chunks_exact(dim).map(<[f64]>::to_vec).collect()
        }))
    };
    let hidden = read_vectors(FLAG_HIDDEN, hdim)?;
    let sent_embed = read_vectors(FLAG_SENT, edim)?;

    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(truncated)?;
    if !rest.is_empty() {
        return Err(Error::BadTensorFile(format!(
            "{} trailing bytes",
            rest.len()
        )));
    }
    TensorSet::new(classes, max_len, ids, token_dists, hidden, sent_embed)
}

fn read_text(text: &str) -> Result<TensorSet> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().unwrap_or((0, ""));
    let mut classes = None;
    let mut max_len = DEFAULT_MAX_LEN;
    for field in header.split_whitespace().skip(1) {
        let bad = || Error::BadTensorFile(format!("bad header field {field:?}"));
        let (key, value) = field.split_once('=').ok_or_else(bad)?;
        let value: usize = value.parse().map_err(|_| bad())?;
        match key {
            "classes" => classes = Some(value),
            "max_len" => max_len = value,
            _ => return Err(bad()),
        }
    }

    let mut dists: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut hidden: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut sent: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (i, line) in lines {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Malformed {
            line: i + 1,
            msg: msg.to_string(),
        };
        let mut parts = line.split_whitespace();
        let kind = parts.next().unwrap_or_default();
        let id: usize = parts
            .next()
            .ok_or_else(|| bad("missing id"))?
            .parse()
            .map_err(|_| bad("bad id"))?;
        let values = parts
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<Vec<_>>>()?;
        match kind {
            "dist" => dists.entry(id).or_default().extend(values),
            "hidden" | "sent" => {
                let map = if kind == "hidden" {
                    &mut hidden
                } else {
                    &mut sent
                };
                if map.insert(id, values).is_some() {
                    return Err(bad("repeated vector for id"));
                }
            }
            _ => return Err(bad("unknown record kind")),
        }
    }

    let classes = match classes {
        Some(c) => c,
        None if dists.is_empty() => 0,
        None => return Err(Error::BadTensorFile("classes missing from header".into())),
    };
    let ids: BTreeSet<usize> = dists
        .keys()
        .chain(hidden.keys())
        .chain(sent.keys())
        .copied()
        .collect();
    let ids: Vec<usize> = ids.into_iter().collect();
    let collect = |map: BTreeMap<usize, Vec<f64>>, name: &str| -> Result<Option<Vec<Vec<f64>>>> {
        if map.is_empty() {
            return Ok(None);
        }
        if map.len() != ids.len() {
            let missing = ids.iter().find(|id| !map.contains_key(id)).unwrap();
            return Err(Error::ShapeMismatch(format!(
                "{name} missing for id {missing}"
            )));
        }
        Ok(Some(map.into_values().collect()))
    };
    let token_dists = collect(dists, "dist")?
        .map(|rows| {
            rows.into_iter()
                .map(|flat| TokenDists::new(classes, flat))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let hidden = collect(hidden, "hidden")?;
    let sent = collect(sent, "sent")?;
    TensorSet::new(classes, max_len, ids, token_dists, hidden, sent)
}

/// Writes the binary container. Values are narrowed to f32.
pub fn write_tensors(ts: &TensorSet, mut out: impl Write) -> std::io::Result<()> {
    let mut flags = 0;
    if ts.token_dists.is_some() {
        flags |= FLAG_DISTS;
    }
    if ts.hidden.is_some() {
        flags |= FLAG_HIDDEN;
    }
    if ts.sent_embed.is_some() {
        flags |= FLAG_SENT;
    }
    out.write_all(MAGIC)?;
    for v in [
        ts.classes,
        ts.max_len,
        ts.ids.len(),
        flags as usize,
        TensorSet::dim(&ts.hidden),
        TensorSet::dim(&ts.sent_embed),
    ] {
        out.write_u32::<LittleEndian>(v as u32)?;
    }
    for (pos, &id) in ts.ids.iter().enumerate() {
        out.write_u32::<LittleEndian>(id as u32)?;
        let rows = ts.token_dists.as_ref().map_or(0, |d| d[pos].n_rows());
        out.write_u32::<LittleEndian>(rows as u32)?;
    }
    if let Some(dists) = &ts.token_dists {
        for d in dists {
            for &v in &d.data {
                out.write_f32::<LittleEndian>(v as f32)?;
            }
        }
    }
    for arr in [&ts.hidden, &ts.sent_embed].into_iter().flatten() {
        for v in arr.iter().flatten() {
            out.write_f32::<LittleEndian>(*v as f32)?;
        }
    }
    Ok(())
}

/// Writes the text container with full f64 precision.
pub fn write_tensors_text(ts: &TensorSet, mut out: impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{TEXT_HEADER} classes={} max_len={}",
        ts.classes, ts.max_len
    )?;
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (pos, id) in ts.ids.iter().enumerate() {
        if let Some(d) = &ts.token_dists {
            for row in d[pos].rows() {
                writeln!(out, "dist {id} {}", join(row))?;
            }
        }
        if let Some(h) = &ts.hidden {
            writeln!(out, "hidden {id} {}", join(&h[pos]))?;
        }
        if let Some(s) = &ts.sent_embed {
            writeln!(out, "sent {id} {}", join(&s[pos]))?;
        }
    }
    Ok(())
}
