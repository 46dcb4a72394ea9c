//! Reports: numeric values kept apart from pass/fail verdicts, written as
//! JSON or CSV, with run metadata in a side file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<String>,
    pub pass: bool,
}

impl Check {
    /// Passes when `statistic < tolerance`.
    pub fn below(name: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            statistic: Some(statistic),
            tolerance: Some(tolerance),
            expected: None,
            observed: None,
            pass: statistic < tolerance,
        }
    }

    pub fn equals(name: impl Into<String>, expected: String, observed: String) -> Self {
        Self {
            name: name.into(),
            statistic: None,
            tolerance: None,
            pass: expected == observed,
            expected: Some(expected),
            observed: Some(observed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Some records hold numeric errors instead of values.
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub checks: Vec<Check>,
    pub errors: usize,
    pub status: Status,
}

impl Verdicts {
    pub fn new(checks: Vec<Check>, errors: usize) -> Self {
        let status = if errors > 0 {
            Status::Error
        } else if checks.iter().all(|c| c.pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self { checks, errors, status }
    }
}

/// Flat rows for CSV output and terminal display.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::numeric("report.csv", e.to_string());
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::numeric("report.csv", e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Column-aligned text.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.headers);
        for r in &self.rows {
            line(&mut out, r);
        }
        out
    }
}

/// Shortest round-trip form, in exponent notation for tiny or huge magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn vector(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    /// The resolved config, defaults filled.
    pub config: serde_json::Value,
    pub values: serde_json::Value,
    pub verdicts: Verdicts,
    #[serde(skip)]
    pub table: Table,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }

    fn verdicts_table(&self) -> Table {
        let mut t = Table::new(&["check", "statistic", "tolerance", "expected", "observed", "pass"]);
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        for c in &self.verdicts.checks {
            t.push(vec![
                c.name.clone(),
                opt(c.statistic),
                opt(c.tolerance),
                c.expected.clone().unwrap_or_default(),
                c.observed.clone().unwrap_or_default(),
                c.pass.to_string(),
            ]);
        }
        t
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut out = format!("{}\n\n{}", self.command, self.table.render());
        if !self.verdicts.checks.is_empty() {
            out.push('\n');
            out.push_str(&self.verdicts_table().render());
        }
        let _ = writeln!(out, "\nstatus: {:?}", self.verdicts.status);
        out
    }

    /// Writes the report to `path` and its metadata next to it. CSV output
    /// puts the values table at `path` and the checks at `<path>.verdicts.csv`.
    pub fn write(&self, path: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::numeric("report.write", format!("{}: {e}", p.display()));
        let mut written = Vec::new();
        match format {
            Format::Json => {
                std::fs::write(path, self.to_json()).map_err(|e| io(path, e))?;
            }
            Format::Csv => {
                std::fs::write(path, self.table.to_csv()?).map_err(|e| io(path, e))?;
                let v = side_file(path, "verdicts.csv");
                std::fs::write(&v, self.verdicts_table().to_csv()?).map_err(|e| io(&v, e))?;
                written.push(v);
            }
        }
        written.insert(0, path.to_path_buf());
        let meta = side_file(path, "meta.json");
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let record = serde_json::json!({
            "report": path.display().to_string(),
            "created_unix_seconds": created,
            "tool_version": env!("CARGO_PKG_VERSION"),
        });
        std::fs::write(&meta, serde_json::to_string_pretty(&record).expect("json") + "\n").map_err(|e| io(&meta, e))?;
        written.push(meta);
        Ok(written)
    }
}

/// `report.json` → `report.json.<suffix>`.
pub fn side_file(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}
