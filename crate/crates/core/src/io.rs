//! Versioned JSON channel files.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "kind": "dense",
//!   "inputs": 2, "out1": 2, "out2": 2,
//!   "rows": [[[0.5, 0.0], [0.0, 0.5]], [[1.0, 0.0], [0.0, 0.0]]]
//! }
//! ```
//!
//! `rows[x][y1][y2]` holds `W(y1 y2 | x)`. A deterministic file replaces the
//! rows by `"pairs": [[y1, y2], ...]`, one pair per input. Either kind may
//! carry `"labels": {"x": [...], "y1": [...], "y2": [...]}`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelTable, DeterministicChannel, NORMALIZATION_TOL};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Environment variable naming the directory that relative output paths
/// resolve against.
pub const WORKDIR_ENV: &str = "BCAST_WORKDIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Labels {
    pub x: Vec<String>,
    pub y1: Vec<String>,
    pub y2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Dense { inputs: usize, out1: usize, out2: usize, rows: Vec<Vec<Vec<f64>>> },
    Deterministic { out1: usize, out2: usize, pairs: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedChannel {
    Dense(ChannelTable<f64>),
    Deterministic(DeterministicChannel),
}

impl LoadedChannel {
    pub fn table(&self) -> ChannelTable<f64> {
        match self {
            LoadedChannel::Dense(w) => w.clone(),
            LoadedChannel::Deterministic(d) => d.to_table(),
        }
    }

    /// The deterministic view, if the channel has one.
    pub fn deterministic(&self) -> Option<DeterministicChannel> {
        match self {
            LoadedChannel::Dense(w) => w.to_deterministic().ok(),
            LoadedChannel::Deterministic(d) => Some(d.clone()),
        }
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        match self {
            LoadedChannel::Dense(w) => (w.input_size(), w.out1_size(), w.out2_size()),
            LoadedChannel::Deterministic(d) => (d.input_size(), d.out1_size(), d.out2_size()),
        }
    }
}

impl ChannelFile {
    pub fn from_dense(w: &ChannelTable<f64>) -> Self {
        let rows = (0..w.input_size())
            .map(|x| (0..w.out1_size()).map(|y1| (0..w.out2_size()).map(|y2| *w.get(x, y1, y2)).collect()).collect())
            .collect();
        ChannelFile {
            format_version: FORMAT_VERSION,
            payload: Payload::Dense { inputs: w.input_size(), out1: w.out1_size(), out2: w.out2_size(), rows },
            labels: None,
        }
    }

    pub fn from_deterministic(d: &DeterministicChannel) -> Self {
        ChannelFile {
            format_version: FORMAT_VERSION,
            payload: Payload::Deterministic { out1: d.out1_size(), out2: d.out2_size(), pairs: d.pairs().to_vec() },
            labels: None,
        }
    }

    pub fn from_loaded(c: &LoadedChannel) -> Self {
        match c {
            LoadedChannel::Dense(w) => Self::from_dense(w),
            LoadedChannel::Deterministic(d) => Self::from_deterministic(d),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    /// Pretty-printed JSON with a trailing newline; stable under
    /// parse/serialize round trips.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("channel files always serialize");
        s.push('\n');
        s
    }

    fn sizes(&self) -> (usize, usize, usize) {
        match &self.payload {
            Payload::Dense { inputs, out1, out2, .. } => (*inputs, *out1, *out2),
            Payload::Deterministic { out1, out2, pairs } => (pairs.len(), *out1, *out2),
        }
    }

    pub fn validate(&self) -> Result<LoadedChannel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported format_version {}, expected {FORMAT_VERSION}",
                self.format_version
            )));
        }
        let (nx, n1, n2) = self.sizes();
        if let Some(labels) = &self.labels {
            for (name, list, size) in [("x", &labels.x, nx), ("y1", &labels.y1, n1), ("y2", &labels.y2, n2)] {
                if list.len() != size {
                    return Err(Error::Validation(format!(
                        "labels.{name} has {} entries, expected {size}",
                        list.len()
                    )));
                }
                let mut seen = HashSet::new();
                if let Some(dup) = list.iter().find(|l| !seen.insert(l.as_str())) {
                    return Err(Error::Validation(format!("labels.{name} repeats {dup:?}")));
                }
            }
        }
        match &self.payload {
            Payload::Dense { rows, .. } => {
                if rows.len() != nx {
                    return Err(Error::Validation(format!("rows has {} inputs, expected {nx}", rows.len())));
                }
                let mut probs = Vec::with_capacity(nx * n1 * n2);
                for (x, row) in rows.iter().enumerate() {
                    if row.len() != n1 {
                        return Err(Error::Validation(format!("rows[{x}] has {} entries, expected {n1}", row.len())));
                    }
                    let mut sum = 0.0;
                    for (y1, col) in row.iter().enumerate() {
                        if col.len() != n2 {
                            return Err(Error::Validation(format!(
                                "rows[{x}][{y1}] has {} entries, expected {n2}",
                                col.len()
                            )));
                        }
                        for (y2, &p) in col.iter().enumerate() {
                            if !(p >= 0.0 && p.is_finite()) {
                                return Err(Error::Validation(format!(
                                    "rows[{x}][{y1}][{y2}] = {p} is not a probability"
                                )));
                            }
                            sum += p;
                        }
                        probs.extend_from_slice(col);
                    }
                    if (sum - 1.0).abs() > NORMALIZATION_TOL {
                        return Err(Error::Validation(format!("row x={x} sums to {sum}, expected 1")));
                    }
                }
                ChannelTable::new(nx, n1, n2, probs)
                    .map(LoadedChannel::Dense)
                    .map_err(|e| Error::Validation(e.to_string()))
            }
            Payload::Deterministic { pairs, .. } => {
                if let Some((x, (y1, y2))) = pairs.iter().enumerate().find(|(_, &(a, b))| a >= n1 || b >= n2) {
                    return Err(Error::Validation(format!("pairs[{x}] = ({y1}, {y2}) out of range {n1}x{n2}")));
                }
                DeterministicChannel::new(n1, n2, pairs.clone())
                    .map(LoadedChannel::Deterministic)
                    .map_err(|e| Error::Validation(e.to_string()))
            }
        }
    }
}

pub fn load_channel_file(path: &Path) -> Result<ChannelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ChannelFile::parse(&text)
}

pub fn load_channel(path: &Path) -> Result<LoadedChannel> {
    load_channel_file(path)?.validate()
}

pub fn save_channel(path: &Path, file: &ChannelFile) -> Result<()> {
    std::fs::write(path, file.to_canonical()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Joins relative paths onto `$BCAST_WORKDIR` when it is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(WORKDIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}
