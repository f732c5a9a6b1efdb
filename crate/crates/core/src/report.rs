//! Versioned JSON run reports.
//!
//! Everything outside `timestamps` is a deterministic function of the inputs, so two runs of
//! the same command can be compared after dropping that one field.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{StudyReport, TimingReport};
use crate::selection::SelectionOutcome;
use crate::solver::SolveResult;

pub const REPORT_SCHEMA: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Published JSON schema for [`RunReport`].
pub const SCHEMA_JSON: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub model: String,
    pub truth: Vec<f64>,
    pub params: Vec<f64>,
    pub samples: usize,
    pub sample_rate: f64,
    pub duration: f64,
    pub sigma: f64,
    pub seed: u64,
    pub data_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "result", rename_all = "snake_case")]
pub enum Payload {
    Fit(SolveResult),
    Select(SelectionOutcome),
    Simulate(SimulationSummary),
    Study(StudyReport),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub vaf: Option<f64>,
    pub bias: Option<Vec<f64>>,
    pub variance: Option<Vec<f64>>,
    pub improvement: Option<f64>,
}

/// Wall-clock data, kept apart from the reproducible part of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_at: String,
    pub finished_at: String,
    pub wall_seconds: f64,
    pub benchmark: Option<TimingReport>,
}

impl Timestamps {
    pub fn since(started: DateTime<Utc>) -> Self {
        let finished = Utc::now();
        Timestamps {
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: finished.to_rfc3339_opts(SecondsFormat::Millis, true),
            wall_seconds: (finished - started).num_microseconds().unwrap_or(0) as f64 * 1e-6,
            benchmark: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_schema: u32,
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub config_hash: String,
    pub spec: Option<String>,
    pub payload: Payload,
    pub metrics: MetricsBlock,
    pub timestamps: Timestamps,
}

impl RunReport {
    pub fn new(
        command: Vec<String>,
        config: &serde_json::Value,
        spec: Option<String>,
        payload: Payload,
        metrics: MetricsBlock,
        timestamps: Timestamps,
    ) -> Self {
        RunReport {
            report_schema: REPORT_SCHEMA,
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            command,
            config_hash: config_hash(config),
            spec,
            payload,
            metrics,
            timestamps,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::input(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::input(path, e))
    }
}

/// Hex SHA-256 of the compact JSON encoding. Object keys serialize in sorted order, so equal
/// content gives an equal hash regardless of how the value was built.
pub fn config_hash(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values always serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The report as a JSON value without its `timestamps` member.
pub fn reproducible_part(report: &serde_json::Value) -> serde_json::Value {
    let mut v = report.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timestamps");
    }
    v
}
