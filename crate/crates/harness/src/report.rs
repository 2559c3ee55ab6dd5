//! Study results in a form that serializes to JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One simulated or computed point of a study.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub label: String,
    pub metrics: BTreeMap<String, f64>,
    /// Trajectory files the metrics were computed from, relative to the
    /// output directory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<String>,
}

impl Point {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Default::default()
        }
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `"< 1e-3"`.
    pub bound: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub parameters: serde_json::Value,
    pub points: Vec<Point>,
    pub slopes: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Supplementary files, relative to the output directory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<String>,
}

impl StudyReport {
    pub fn new(study: &str, parameters: serde_json::Value) -> Self {
        Self {
            study: study.to_string(),
            parameters,
            points: Vec::new(),
            slopes: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        value: f64,
        bound: impl Into<String>,
        passed: bool,
    ) {
        self.checks.push(Check {
            name: name.into(),
            value,
            bound: bound.into(),
            passed,
        });
    }

    pub fn point(&self, label: &str) -> Option<&Point> {
        self.points.iter().find(|p| p.label == label)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write(&self, dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.study));
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}
