use crate::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

/// How `residual` is compared with `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `residual <= tolerance`.
    AtMost,
    /// `residual > tolerance` (negative controls).
    Above,
}

/// One line of the machine-readable report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub params: Value,
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    /// The check is meant to fail: a known violation shown for contrast.
    pub expected_violation: bool,
}

impl CheckRecord {
    pub fn at_most(id: impl Into<String>, params: Value, residual: f64, tolerance: f64) -> Self {
        Self::make(id, params, residual, tolerance, Comparison::AtMost, false)
    }

    pub fn above(id: impl Into<String>, params: Value, residual: f64, threshold: f64) -> Self {
        Self::make(id, params, residual, threshold, Comparison::Above, false)
    }

    /// A tolerance check that is expected to fail.
    pub fn expected_violation(id: impl Into<String>, params: Value, residual: f64, tolerance: f64) -> Self {
        Self::make(id, params, residual, tolerance, Comparison::AtMost, true)
    }

    fn make(id: impl Into<String>, params: Value, residual: f64, tolerance: f64, comparison: Comparison, xv: bool) -> Self {
        // NaN fails both comparisons
        let pass = match comparison {
            Comparison::AtMost => residual <= tolerance,
            Comparison::Above => residual > tolerance,
        };
        CheckRecord { id: id.into(), params, residual, tolerance, comparison, pass, expected_violation: xv }
    }

    /// Whether the record matches its expectation.
    pub fn ok(&self) -> bool {
        self.pass != self.expected_violation
    }

    fn verdict(&self) -> &'static str {
        match (self.pass, self.expected_violation) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (expected violation)",
            (true, true) => "UNEXPECTED PASS",
        }
    }
}

/// Records plus CSV tables produced by sweeps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub records: Vec<CheckRecord>,
    /// `(file name, CSV text)`.
    pub tables: Vec<(String, String)>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.records.iter().all(CheckRecord::ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.ok())
    }

    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.records.iter().filter(move |r| r.id.starts_with(prefix))
    }

    /// One JSON object per line.
    pub fn jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("records serialize"));
            s.push('\n');
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let width = self.records.iter().map(|r| r.id.len()).max().unwrap_or(0);
        for r in &self.records {
            let op = match r.comparison {
                Comparison::AtMost => "<=",
                Comparison::Above => "> ",
            };
            let _ = writeln!(s, "{:<width$}  {:>10.3e} {op} {:<9.1e}  {}", r.id, r.residual, r.tolerance, r.verdict());
        }
        let bad = self.failures().count();
        let xv = self.records.iter().filter(|r| r.expected_violation).count();
        let _ = writeln!(
            s,
            "{} checks, {} unexpected outcomes, {} expected violations: {}",
            self.records.len(),
            bad,
            xv,
            if bad == 0 { "OK" } else { "FAILED" }
        );
        s
    }

    /// Writes `report.jsonl`, `summary.txt` and the CSV tables into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.jsonl"), self.jsonl())?;
        std::fs::write(dir.join("summary.txt"), self.summary())?;
        for (name, text) in &self.tables {
            if name.contains(std::path::is_separator) {
                return Err(Error::Internal(format!("table name {name} is not a plain file name")));
            }
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn verdicts() {
        assert!(CheckRecord::at_most("a", json!({}), 1e-13, 1e-12).ok());
        assert!(!CheckRecord::at_most("a", json!({}), f64::NAN, 1e-12).ok());
        assert!(CheckRecord::above("a", json!({}), 0.1, 1e-3).ok());
        assert!(!CheckRecord::above("a", json!({}), f64::NAN, 1e-3).ok());
        let x = CheckRecord::expected_violation("a", json!({}), 0.5, 1e-10);
        assert!(!x.pass && x.ok());
        assert!(!CheckRecord::expected_violation("a", json!({}), 0.0, 1e-10).ok());
    }

    #[test]
    fn jsonl_schema() {
        let r = Report { records: vec![CheckRecord::at_most("ccr/x", json!({"n": 3}), 0.0, 1e-12)], tables: vec![] };
        let line = r.jsonl();
        let v: Value = serde_json::from_str(line.trim()).unwrap();
        for key in ["id", "params", "residual", "tolerance", "comparison", "pass", "expected_violation"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(r.summary().contains("PASS"));
    }
}
