use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Structured,
    Csv,
}

/// Named numeric columns of equal length; a missing cell is `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn push_full(&mut self, row: &[f64]) {
        self.push(row.iter().copied().map(Some).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// `value relation tolerance`, e.g. `residual <= 1e-10`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub tolerance: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: "<=",
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: "<",
            tolerance,
            passed: value < tolerance,
        }
    }

    pub fn equals(name: &str, value: f64, target: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: "==",
            tolerance: target,
            passed: value == target,
        }
    }
}

/// Everything an experiment produced. Wall-clock time is deliberately not
/// part of it, so that identical runs emit identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub inputs: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
    pub scalars: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, Table>,
    pub notes: Vec<String>,
    pub verdicts: Vec<Verdict>,
    /// Error chain, outermost first, when the run failed.
    pub errors: Vec<String>,
    pub passed: bool,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            inputs: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            scalars: BTreeMap::new(),
            tables: BTreeMap::new(),
            notes: Vec::new(),
            verdicts: Vec::new(),
            errors: Vec::new(),
            passed: true,
        }
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.insert(key.to_string(), value);
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn fail_with(&mut self, err: &(dyn std::error::Error + 'static)) {
        let mut cur = Some(err);
        while let Some(e) = cur {
            self.errors.push(e.to_string());
            cur = e.source();
        }
    }

    pub fn finish(&mut self) {
        self.passed = self.errors.is_empty() && self.verdicts.iter().all(|v| v.passed);
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.17e}"))
}

fn csv(report: &Report) -> String {
    let mut out = String::new();
    for (i, (name, table)) in report.tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        writeln!(out, "# {name}").unwrap();
        writeln!(out, "{}", table.columns.join(",")).unwrap();
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(|&v| cell(v)).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
    }
    out
}

/// Renders the report. The structured form is one JSON document with keys
/// in sorted order; the CSV form has one block per table, each introduced by
/// a `# name` line and its header.
pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => csv(report),
    }
}
