//! CSV tables and the JSON run summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Provenance written as the first line of every CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub mode: String,
    pub config_sha256: String,
    pub seed: u64,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Numeric or text cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::I(x)
    }
}

impl From<u8> for Cell {
    fn from(x: u8) -> Self {
        Cell::I(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

/// An in-memory CSV table. Floats use Rust's shortest round-trip format,
/// which is what keeps repeated runs byte-identical.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when no float cell is NaN or infinite.
    pub fn all_finite(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .all(|c| !matches!(c, Cell::F(x) if !x.is_finite()))
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let mut s = format!(
            "# qpc-noise mode={} config_sha256={} seed={}\n",
            prov.mode, prov.config_sha256, prov.seed
        );
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::F(x) => write_float(&mut s, *x),
                    Cell::I(x) => write!(s, "{x}").unwrap(),
                    Cell::S(x) => s.push_str(x),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip form; exponent notation for very small or large
/// magnitudes.
fn write_float(s: &mut String, x: f64) {
    let a = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&a) {
        write!(s, "{x:e}").unwrap();
    } else {
        write!(s, "{x}").unwrap();
    }
}

/// One self-judged assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self {
            name: name.to_string(),
            value: f64::from(u8::from(ok)),
            threshold: 1.0,
            pass: ok,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: String,
    pub pass: bool,
    pub seed: u64,
    pub config_sha256: String,
    pub checks: Vec<Check>,
    /// Mean uncensored run length, when telegraph analysis ran.
    pub empirical_n_max: Option<f64>,
    /// `detector.n_max` from the config, for comparison.
    pub configured_n_max: Option<usize>,
    /// Mode-specific scalars (means, variances, fit results).
    pub metrics: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

/// Collects files under an output directory and writes them at the end.
#[derive(Debug)]
pub struct Emitter {
    dir: PathBuf,
    prov: Provenance,
    files: Vec<(String, Vec<u8>)>,
}

impl Emitter {
    pub fn new(dir: &Path, prov: Provenance) -> Self {
        Self {
            dir: dir.to_path_buf(),
            prov,
            files: Vec::new(),
        }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) {
        self.files.push((name.to_string(), table.render(&self.prov).into_bytes()));
    }

    pub fn bytes(&mut self, name: &str, data: Vec<u8>) {
        self.files.push((name.to_string(), data));
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.files.iter().map(|(n, _)| n.clone()).collect();
        names.push("summary.json".into());
        names
    }

    /// Writes every collected file plus `summary.json`.
    pub fn finish(self, summary: &Summary) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        for (name, data) in &self.files {
            std::fs::write(self.dir.join(name), data)?;
        }
        let mut json = serde_json::to_string_pretty(summary)?;
        json.push('\n');
        std::fs::write(self.dir.join("summary.json"), json)?;
        Ok(())
    }
}
