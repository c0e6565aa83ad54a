//! Series tables: UTF-8, LF, 17 significant digits, rows by z then engine.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{Engine, ObservableSeries};

/// One data row: numeric columns followed by the engine tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub values: Vec<f64>,
    pub engine: Engine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Column names, `engine` last.
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut header: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        header.push("engine".into());
        Self {
            header,
            rows: Vec::new(),
        }
    }

    /// Sorts by the first column, then engine, then the remaining columns.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.values[0]
                .total_cmp(&b.values[0])
                .then(a.engine.cmp(&b.engine))
                .then_with(|| {
                    a.values[1..]
                        .iter()
                        .zip(&b.values[1..])
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| *o != Ordering::Equal)
                        .unwrap_or(Ordering::Equal)
                })
        });
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for v in &row.values {
                let _ = write!(out, "{},", format_value(*v));
            }
            out.push_str(row.engine.name());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split('\n');
        let header_line = lines.next().unwrap_or_default();
        let header: Vec<String> = header_line.split(',').map(str::to_string).collect();
        if header.last().map(String::as_str) != Some("engine") {
            return Err(Error::Config("csv header must end with `engine`".into()));
        }
        let width = header.len();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != width {
                return Err(Error::Config(format!(
                    "csv line {}: expected {width} cells, found {}",
                    n + 2,
                    cells.len()
                )));
            }
            let values = cells[..width - 1]
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|e| Error::Config(format!("csv line {}: `{c}`: {e}", n + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            let engine = parse_engine(cells[width - 1])
                .ok_or_else(|| Error::Config(format!("csv line {}: unknown engine", n + 2)))?;
            rows.push(Row { values, engine });
        }
        Ok(Self { header, rows })
    }
}

/// Round-trip decimal form with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_engine(s: &str) -> Option<Engine> {
    [Engine::Exact, Engine::Tb, Engine::Bpm]
        .into_iter()
        .find(|e| e.name() == s)
}

/// Table of one observable over any number of engines; `complex` selects
/// `_re`/`_im` columns.
pub fn series_table(label: &str, complex: bool, series: &[ObservableSeries]) -> Table {
    let mut table = if complex {
        Table::new(&["z", &format!("{label}_re"), &format!("{label}_im")])
    } else {
        Table::new(&["z", label])
    };
    for s in series {
        for (z, v) in s.z.iter().zip(&s.values) {
            let values = if complex { vec![*z, v.re, v.im] } else { vec![*z, v.re] };
            table.rows.push(Row {
                values,
                engine: s.engine,
            });
        }
    }
    table.sort();
    table
}

/// Provenance written next to every emitted table as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub file: String,
    pub columns: Vec<String>,
    pub engines: Vec<Engine>,
    pub config_hash: String,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the table and its sidecar.
pub fn write_table(table: &Table, path: &Path, config_hash: &str, notes: Vec<String>) -> Result<()> {
    write(path, table.to_csv_string().as_bytes())?;
    let mut engines: Vec<Engine> = table.rows.iter().map(|r| r.engine).collect();
    engines.sort();
    engines.dedup();
    let meta = Sidecar {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        columns: table.header.clone(),
        engines,
        config_hash: config_hash.to_string(),
        notes,
    };
    let mut json = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    json.push('\n');
    write(&sidecar_path(path), json.as_bytes())
}

/// Writes one observable's series (all engines) to `path`.
pub fn emit_csv(
    label: &str,
    complex: bool,
    series: &[ObservableSeries],
    path: &Path,
    config_hash: &str,
) -> Result<()> {
    let table = series_table(label, complex, series);
    let mut notes: Vec<String> = series
        .iter()
        .map(|s| {
            format!(
                "{}: metric {:?}, normalization {:?}",
                s.engine.name(),
                s.metric,
                s.normalization
            )
        })
        .collect();
    notes.dedup();
    write_table(&table, path, config_hash, notes)
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Table::parse(&text)
}
