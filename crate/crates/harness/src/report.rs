//! Experiment reports and the output directory layout.
//!
//! `report.json` at the top, CSV series under `series/`, binary snapshots
//! under `snapshots/`.

use std::fs;
use std::path::Path;
use std::time::Instant;

use gsqg_core::solver::{write_snapshot, Snapshot};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    /// A run without verdicts that finished.
    Complete,
}

/// A judged quantity together with the tolerance it was judged against.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub tolerance: f64,
    /// How `value` is compared with `tolerance`.
    pub rule: String,
}

impl Verdict {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self::judge(name, value, tolerance, value <= tolerance, "value <= tolerance")
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self::judge(name, value, tolerance, value >= tolerance, "value >= tolerance")
    }

    pub fn judge(name: &str, value: f64, tolerance: f64, pass: bool, rule: &str) -> Self {
        Self {
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            value,
            tolerance,
            rule: rule.to_string(),
        }
    }

    pub fn with_status(name: &str, status: Status, value: f64, tolerance: f64, rule: &str) -> Self {
        Self {
            name: name.to_string(),
            status,
            value,
            tolerance,
            rule: rule.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    /// SHA-256 of the serialized configuration.
    pub config_hash: String,
    pub config: Value,
    pub runs: Vec<Value>,
    pub aggregates: Value,
    pub verdicts: Vec<Verdict>,
    pub status: Status,
    pub notes: Vec<String>,
    pub steps: u64,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(experiment: &str, config: &C) -> Result<Self, HarnessError> {
        let config = serde_json::to_value(config)?;
        let text = serde_json::to_string(&config)?;
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Self {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: hash,
            config,
            runs: Vec::new(),
            aggregates: json!({}),
            verdicts: Vec::new(),
            status: Status::Complete,
            notes: Vec::new(),
            steps: 0,
            wall_clock_seconds: 0.0,
        })
    }

    pub fn aggregate(&mut self, key: &str, value: Value) {
        if let Value::Object(map) = &mut self.aggregates {
            map.insert(key.to_string(), value);
        }
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
        self.status = overall(&self.verdicts);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn finish(&mut self, started: Instant) {
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
        self.status = overall(&self.verdicts);
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, Status::Pass | Status::Complete)
    }
}

/// FAIL beats INCONCLUSIVE beats PASS; no verdicts means COMPLETE.
pub fn overall(verdicts: &[Verdict]) -> Status {
    if verdicts.is_empty() {
        Status::Complete
    } else if verdicts.iter().any(|v| v.status == Status::Fail) {
        Status::Fail
    } else if verdicts.iter().any(|v| v.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

/// Named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub csv: String,
}

impl Series {
    pub fn new(name: impl Into<String>, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut csv = String::from(header);
        csv.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        Self { name: name.into(), csv }
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub series: Vec<Series>,
    pub snapshots: Vec<(String, Snapshot)>,
}

impl ExperimentOutput {
    pub fn new(report: ExperimentReport) -> Self {
        Self {
            report,
            series: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report)?)?;
        if !self.series.is_empty() {
            let sdir = dir.join("series");
            fs::create_dir_all(&sdir)?;
            for s in &self.series {
                fs::write(sdir.join(format!("{}.csv", s.name)), &s.csv)?;
            }
        }
        if !self.snapshots.is_empty() {
            let sdir = dir.join("snapshots");
            fs::create_dir_all(&sdir)?;
            for (name, s) in &self.snapshots {
                write_snapshot(&sdir.join(format!("{name}.bin")), &s.field, s.time, s.beta)?;
            }
        }
        Ok(())
    }
}
