//! Result tables: CSV/JSON emission and column-wise comparison.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::config::Format;

/// Columns whose values are compared exactly when aligning two tables.
const KEY_COLUMNS: &[&str] = &["time", "n", "m", "k", "x", "nu"];

#[derive(Debug, Error)]
pub enum TableError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("schema mismatch: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    /// Columns holding integer indices, printed without a fraction.
    #[serde(skip)]
    pub integer: Vec<bool>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            integer: columns.iter().map(|c| matches!(*c, "n" | "m" | "k")).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn cell(&self, col: usize, v: f64) -> String {
        if self.integer[col] && v.fract() == 0.0 && v.is_finite() {
            format!("{}", v as i64)
        } else {
            format!("{v:.16e}")
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().enumerate().map(|(i, v)| self.cell(i, *v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, summary: &str) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            summary: &'a str,
            columns: &'a [String],
            rows: &'a [Vec<f64>],
        }
        let doc = Doc {
            summary,
            columns: &self.columns,
            rows: &self.rows,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("tables serialise");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, summary: &str) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(summary),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn write_output(path: Option<&str>, text: &str) -> Result<(), TableError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| TableError::Io {
            path: p.to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| TableError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

pub fn read_csv(path: &Path) -> Result<Table, TableError> {
    let name = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|source| TableError::Csv {
        path: name.clone(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|source| TableError::Csv {
            path: name.clone(),
            source,
        })?
        .clone();
    let columns: Vec<&str> = headers.iter().collect();
    let mut table = Table::new(&columns);
    for record in reader.records() {
        let record = record.map_err(|source| TableError::Csv {
            path: name.clone(),
            source,
        })?;
        let row = record
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| TableError::Schema(format!("{name}: non-numeric cell ({e})")))?;
        table.push(row);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnGap {
    pub column: String,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Largest `|a − b| / stderr` when a stderr column is present.
    pub max_sigma: Option<f64>,
}

/// Column-wise gaps between two tables with the same key columns.
///
/// Value columns present in both tables are compared; a `stderr` column in
/// either table turns the `value` gap into a standard-error multiple.
pub fn compare_tables(a: &Table, b: &Table) -> Result<Vec<ColumnGap>, TableError> {
    if a.rows.len() != b.rows.len() {
        return Err(TableError::Schema(format!("row counts differ: {} vs {}", a.rows.len(), b.rows.len())));
    }
    let keys_a: Vec<&String> = a.columns.iter().filter(|c| KEY_COLUMNS.contains(&c.as_str())).collect();
    let keys_b: Vec<&String> = b.columns.iter().filter(|c| KEY_COLUMNS.contains(&c.as_str())).collect();
    if keys_a != keys_b {
        return Err(TableError::Schema(format!("key columns differ: {keys_a:?} vs {keys_b:?}")));
    }
    for key in &keys_a {
        let (ia, ib) = (a.column(key).expect("present"), b.column(key).expect("present"));
        for (r, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
            if (ra[ia] - rb[ib]).abs() > 1e-12 * ra[ia].abs().max(1.0) {
                return Err(TableError::Schema(format!("key `{key}` differs at row {r}: {} vs {}", ra[ia], rb[ib])));
            }
        }
    }
    let stderr = |t: &Table| t.column("stderr");
    let shared: Vec<&String> = a
        .columns
        .iter()
        .filter(|c| !KEY_COLUMNS.contains(&c.as_str()) && c.as_str() != "stderr" && b.column(c).is_some())
        .collect();
    if shared.is_empty() {
        return Err(TableError::Schema("no value columns in common".into()));
    }
    let mut gaps = Vec::new();
    for name in shared {
        let (ia, ib) = (a.column(name).expect("present"), b.column(name).expect("present"));
        let mut gap = ColumnGap {
            column: name.clone(),
            max_abs: 0.0,
            max_rel: 0.0,
            max_sigma: None,
        };
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            let d = (ra[ia] - rb[ib]).abs();
            gap.max_abs = gap.max_abs.max(d);
            let scale = ra[ia].abs().max(rb[ib].abs());
            if scale > 0.0 {
                gap.max_rel = gap.max_rel.max(d / scale);
            }
            if name == "value" {
                let se = [stderr(a).map(|i| ra[i]), stderr(b).map(|i| rb[i])];
                let se = se.iter().flatten().map(|s| s * s).sum::<f64>().sqrt();
                if se > 0.0 {
                    let z = d / se;
                    gap.max_sigma = Some(gap.max_sigma.map_or(z, |m: f64| m.max(z)));
                }
            }
        }
        gaps.push(gap);
    }
    Ok(gaps)
}
