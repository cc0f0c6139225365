//! Machine-readable CLI output. Bump [`SCHEMA_VERSION`] on any breaking
//! change to these types.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effects::{EffectReport, IndividualEffects};
use crate::estimation::EstimatorResult;
use crate::identification::{LadderReport, RungReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<EffectEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<UnitEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<EstimateEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<ComparisonEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<RungEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            model: None,
            seed: None,
            n: None,
            effects: Vec::new(),
            units: Vec::new(),
            estimates: Vec::new(),
            comparisons: Vec::new(),
            ladder: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn effect(&self, label: &str) -> Option<&EffectEntry> {
        self.effects.iter().find(|e| e.label == label)
    }

    pub fn estimate(&self, label: &str) -> Option<&EstimateEntry> {
        self.estimates.iter().find(|e| e.label == label)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectEntry {
    pub label: String,
    pub value: f64,
    pub left_mean: f64,
    pub right_mean: f64,
    pub condition: String,
    /// `identified`, `NOT IDENTIFIED` or `unchecked`.
    pub identification: String,
}

impl From<&EffectReport<f64>> for EffectEntry {
    fn from(r: &EffectReport<f64>) -> Self {
        Self {
            label: r.label.clone(),
            value: r.value,
            left_mean: r.left_mean,
            right_mean: r.right_mean,
            condition: r.condition.clone(),
            identification: r.identified.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitEntry {
    pub unit: String,
    pub probability: f64,
    pub m0: String,
    pub m1: String,
    pub y0: f64,
    pub y1_m0: f64,
    pub y1: f64,
    pub nde: f64,
    pub nie: f64,
}

impl From<&IndividualEffects<f64>> for UnitEntry {
    fn from(r: &IndividualEffects<f64>) -> Self {
        Self {
            unit: r.unit.clone(),
            probability: r.probability,
            m0: r.m0.to_string(),
            m1: r.m1.to_string(),
            y0: r.y0,
            y1_m0: r.y1_m0,
            y1: r.y1,
            nde: r.nde,
            nie: r.nie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateEntry {
    pub label: String,
    pub estimate: f64,
    pub standard_error: Option<f64>,
    pub n: Option<usize>,
    pub method: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl From<&EstimatorResult<f64>> for EstimateEntry {
    fn from(r: &EstimatorResult<f64>) -> Self {
        Self {
            label: r.label.clone(),
            estimate: r.estimate,
            standard_error: r.standard_error,
            n: r.n,
            method: r.method.clone(),
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonEntry {
    pub label: String,
    pub truth: f64,
    pub estimate: Option<f64>,
    pub standard_error: Option<f64>,
    /// `(estimate - truth) / standard_error`.
    pub z: Option<f64>,
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Deviations beyond this many standard errors are flagged.
pub const Z_FLAG: f64 = 4.0;

impl ComparisonEntry {
    pub fn new(label: impl Into<String>, truth: f64, estimate: f64, standard_error: Option<f64>) -> Self {
        let z = standard_error.filter(|se| *se > 0.0).map(|se| (estimate - truth) / se);
        let flagged = match (z, standard_error) {
            (Some(z), _) => z.abs() > Z_FLAG,
            // Zero SE: any deviation at all is significant.
            (None, Some(_)) => (estimate - truth).abs() > 1e-9 * truth.abs().max(1.0),
            (None, None) => false,
        };
        Self {
            label: label.into(),
            truth,
            estimate: Some(estimate),
            standard_error,
            z,
            flagged,
            note: None,
        }
    }

    pub fn missing(label: impl Into<String>, truth: f64, note: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            truth,
            estimate: None,
            standard_error: None,
            z: None,
            flagged: false,
            note: Some(note.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RungEntry {
    pub family: String,
    pub identified: bool,
    pub assumption: Option<String>,
    pub witness: Option<String>,
    /// The human-readable line, e.g. `RUNG TE: IDENTIFIED`.
    pub line: String,
}

impl From<&RungReport> for RungEntry {
    fn from(r: &RungReport) -> Self {
        Self {
            family: r.family.to_string(),
            identified: r.is_identified(),
            assumption: r.failed_assumption().map(|a| a.to_string()),
            witness: r.witness().map(str::to_string),
            line: r.to_string(),
        }
    }
}

pub fn ladder_entries(ladder: &LadderReport) -> Vec<RungEntry> {
    ladder.rungs.iter().map(RungEntry::from).collect()
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unsupported report schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
}

pub fn parse_report(text: &str) -> Result<Report, ReportError> {
    let report: Report = serde_json::from_str(text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(ReportError::Version(report.schema_version));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = Report::new("compare");
        r.seed = Some(7);
        r.comparisons.push(ComparisonEntry::new("TE", 1.0, 1.1, Some(0.05)));
        r.comparisons.push(ComparisonEntry::missing("NDE(.0)", 0.5, "refused"));
        let back = parse_report(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(!back.comparisons[0].flagged);
        assert!((back.comparisons[0].z.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn flags_large_z() {
        assert!(ComparisonEntry::new("x", 0.0, 1.0, Some(0.1)).flagged);
    }

    #[test]
    fn rejects_other_versions() {
        let text = Report::new("truth").to_json().replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(parse_report(&text), Err(ReportError::Version(2))));
    }
}
