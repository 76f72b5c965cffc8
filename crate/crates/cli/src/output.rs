use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Experiment;
use crate::error::CliError;

/// Keys that do not change any result and are left out of the hash.
pub const UNHASHED_KEYS: [&str; 2] = ["threads", "out"];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(x.to_string()),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Named columns and rows of an experiment's results.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Value of `column` in row `i`, if numeric.
    pub fn num(&self, i: usize, column: &str) -> Option<f64> {
        let j = self.columns.iter().position(|c| *c == column)?;
        match self.rows.get(i)?.get(j)? {
            Cell::Num(x) => Some(*x),
            Cell::Int(k) => Some(*k as f64),
            _ => None,
        }
    }

    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// SHA-256 of the canonical JSON of everything that determines the results.
pub fn manifest_hash(experiment: Experiment, parameters: &BTreeMap<String, Value>) -> String {
    let hashed: BTreeMap<&String, &Value> = parameters
        .iter()
        .filter(|(k, _)| !UNHASHED_KEYS.contains(&k.as_str()))
        .collect();
    let canonical = json!({
        "experiment": experiment.as_str(),
        "parameters": hashed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

/// Everything an experiment produced, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub experiment: Experiment,
    pub parameters: BTreeMap<String, Value>,
    pub table: Table,
    /// Extra results (fits, diagnostics) for `results.json`.
    pub summary: Value,
    pub comments: Vec<String>,
    pub warnings: Vec<String>,
    pub snapshots: Vec<(String, String)>,
    pub wall_time_seconds: f64,
}

impl RunOutput {
    pub fn hash(&self) -> String {
        manifest_hash(self.experiment, &self.parameters)
    }

    pub fn seed(&self) -> Option<u64> {
        self.parameters.get("seed").and_then(Value::as_u64)
    }

    pub fn results_csv(&self) -> String {
        let mut comments = vec![
            format!("manifest_sha256={}", self.hash()),
            format!("experiment={}", self.experiment),
        ];
        comments.extend(self.comments.iter().cloned());
        self.table.to_csv(&comments)
    }

    pub fn results_json(&self) -> String {
        let v = json!({
            "experiment": self.experiment.as_str(),
            "manifest_sha256": self.hash(),
            "rows": self.table.to_json(),
            "summary": self.summary,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("serializable");
        s.push('\n');
        s
    }

    pub fn manifest_json(&self) -> String {
        let v = json!({
            "experiment": self.experiment.as_str(),
            "parameters": self.parameters,
            "seed": self.seed(),
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": self.wall_time_seconds,
            "manifest_sha256": self.hash(),
            "hash_excludes": UNHASHED_KEYS,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("serializable");
        s.push('\n');
        s
    }

    /// Writes `results.csv`, `results.json`, `manifest.json` and any
    /// `snapshots/*.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.results_csv())?;
        std::fs::write(dir.join("results.json"), self.results_json())?;
        std::fs::write(dir.join("manifest.json"), self.manifest_json())?;
        if !self.snapshots.is_empty() {
            let snap = dir.join("snapshots");
            std::fs::create_dir_all(&snap)?;
            for (name, body) in &self.snapshots {
                std::fs::write(snap.join(name), body)?;
            }
        }
        Ok(())
    }
}
