//! Verdicts, ensemble reports and their JSON/CSV persistence.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// A statistical or deterministic judgement with the tolerance it was held to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub estimate: f64,
    pub ci: [f64; 2],
    pub n: usize,
    /// Threshold value and the rule it enters.
    pub tolerance: f64,
    pub rule: String,
    pub passed: bool,
}

impl Verdict {
    pub fn new(
        name: impl Into<String>,
        estimate: f64,
        ci: [f64; 2],
        n: usize,
        tolerance: f64,
        rule: impl Into<String>,
        passed: bool,
    ) -> Self {
        Verdict {
            name: name.into(),
            estimate,
            ci,
            n,
            tolerance,
            rule: rule.into(),
            passed,
        }
    }

    /// Deterministic check `estimate <= tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, estimate: f64, tolerance: f64) -> Self {
        let passed = estimate <= tolerance;
        Verdict::new(
            name,
            estimate,
            [estimate, estimate],
            1,
            tolerance,
            "estimate <= tolerance",
            passed,
        )
    }

    /// Deterministic check `estimate >= tolerance`.
    pub fn at_least(name: impl Into<String>, estimate: f64, tolerance: f64) -> Self {
        let passed = estimate >= tolerance;
        Verdict::new(
            name,
            estimate,
            [estimate, estimate],
            1,
            tolerance,
            "estimate >= tolerance",
            passed,
        )
    }

    /// `|mean - target| <= band * stderr`.
    pub fn within_stderr(
        name: impl Into<String>,
        mean: f64,
        stderr: f64,
        n: usize,
        target: f64,
        band: f64,
    ) -> Self {
        let z = (mean - target) / stderr;
        Verdict::new(
            name,
            mean,
            [mean - band * stderr, mean + band * stderr],
            n,
            band,
            format!("|estimate - {target}| <= tolerance * stderr"),
            z.abs() <= band,
        )
    }
}

/// A named point estimate with its interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub name: String,
    pub estimate: f64,
    pub ci: [f64; 2],
    pub n: usize,
}

/// Deterministic part of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub task: String,
    pub config: RunConfig,
    pub estimators: Vec<EstimatorSummary>,
    pub verdicts: Vec<Verdict>,
    pub details: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub replicates_per_second: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub schema_version: u32,
    pub body: ReportBody,
    pub timing: Timing,
}

impl EnsembleReport {
    pub fn passed(&self) -> bool {
        self.body.verdicts.iter().all(|v| v.passed)
    }

    /// Canonical serialization of the body, used for determinism comparisons.
    pub fn body_json(&self) -> String {
        serde_json::to_string(&self.body).expect("report body serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// A CSV table with a header row.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert!(Verdict::at_most("x", 1.0, 1.0).passed);
        assert!(!Verdict::at_most("x", f64::NAN, 1.0).passed);
        assert!(Verdict::within_stderr("m", 1.02, 0.01, 10, 1.0, 3.0).passed);
        assert!(!Verdict::within_stderr("m", 1.05, 0.01, 10, 1.0, 3.0).passed);
    }

    #[test]
    fn table_writes_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        let p = dir.path().join("tables/t.csv");
        t.write(&p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "a,b\n1,2\n");
    }
}
