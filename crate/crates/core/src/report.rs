//! Measured constants and verdicts for the inequalities checked by the engine.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

/// Location and value of an extreme ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub point: Vec<f64>,
    pub value: f64,
}

/// Empirical constants for one inequality, with the refinement comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Stable identifier of the inequality, e.g. `"density.two_sided"`.
    pub id: String,
    pub description: String,
    pub constants: BTreeMap<String, f64>,
    pub refined_constants: BTreeMap<String, f64>,
    /// Largest relative change of a constant between the base and refined grids.
    pub stability_delta: Option<f64>,
    pub threshold: Option<f64>,
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(id: &str, description: &str) -> Self {
        BoundReport {
            id: id.to_string(),
            description: description.to_string(),
            constants: BTreeMap::new(),
            refined_constants: BTreeMap::new(),
            stability_delta: None,
            threshold: None,
            status: Status::Info,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn witness(mut self, label: &str, point: Vec<f64>, value: f64) -> Self {
        self.witnesses.push(Witness { label: label.to_string(), point, value });
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Pass iff every constant is finite and positive.
    pub fn judge_finite_positive(mut self) -> Self {
        let ok = !self.constants.is_empty()
            && self.constants.values().all(|v| v.is_finite() && *v > 0.0);
        self.status = if ok { Status::Pass } else { Status::Fail };
        self
    }

    /// Pass iff `value ≤ limit`.
    pub fn judge_at_most(mut self, key: &str, limit: f64) -> Self {
        let v = self.constants.get(key).copied().unwrap_or(f64::NAN);
        self.threshold = Some(limit);
        self.status = if v.is_finite() && v <= limit { Status::Pass } else { Status::Fail };
        self
    }

    /// Compares against the same report computed on a refined grid: passes iff all
    /// constants are finite and positive in both and change by at most `threshold`
    /// (relative to the refined value).
    pub fn with_refinement(mut self, refined: &BoundReport, threshold: f64) -> Self {
        let mut delta: f64 = 0.0;
        let mut ok = !self.constants.is_empty();
        for (k, v) in &self.constants {
            match refined.constants.get(k) {
                Some(r) if v.is_finite() && r.is_finite() && *v > 0.0 && *r > 0.0 => {
                    delta = delta.max((r - v).abs() / r.abs());
                }
                _ => ok = false,
            }
        }
        self.refined_constants = refined.constants.clone();
        self.stability_delta = Some(if ok { delta } else { f64::INFINITY });
        self.threshold = Some(threshold);
        self.status = if ok && delta <= threshold { Status::Pass } else { Status::Fail };
        self
    }
}

/// Where a run came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical configuration.
    pub config_hash: String,
    pub version: String,
    pub pipeline: String,
    pub preset: Option<String>,
    pub seed: u64,
    /// Seconds since the Unix epoch; the only field that differs between identical runs.
    pub timestamp: u64,
}

/// Series bookkeeping attached to a run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvergenceRecord {
    Parametrix { label: String, log: crate::parametrix::ConvergenceLog },
    Drift { label: String, log: crate::drift::GammaLog },
}

/// A file written by a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: String,
    pub path: String,
}

/// One curve `x ↦ value` at a fixed time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub label: String,
    pub t: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

/// A kernel divided by its two-sided envelope at one `(t, x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub label: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub ratio: f64,
}

/// Data behind the plot CSVs, kept in the report so they can be re-rendered.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub slices: Vec<Slice>,
    pub ratio_heatmap: Vec<RatioCell>,
}

/// Everything one invocation produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub status: Status,
    pub reports: Vec<BoundReport>,
    pub criteria: Vec<crate::verify::CriterionOutcome>,
    pub convergence: Vec<ConvergenceRecord>,
    pub plots: PlotData,
    pub artifacts: Vec<Artifact>,
}

impl RunReport {
    pub fn new(provenance: Provenance) -> Self {
        RunReport {
            provenance,
            status: Status::Info,
            reports: Vec::new(),
            criteria: Vec::new(),
            convergence: Vec::new(),
            plots: PlotData::default(),
            artifacts: Vec::new(),
        }
    }

    /// Fail if any report or criterion failed, pass if anything was judged, info otherwise.
    pub fn finalize(&mut self) {
        let failed = self.reports.iter().any(|r| r.status == Status::Fail) || self.criteria.iter().any(|c| !c.passed);
        let judged = self.reports.iter().any(|r| r.status == Status::Pass) || !self.criteria.is_empty();
        self.status = if failed {
            Status::Fail
        } else if judged {
            Status::Pass
        } else {
            Status::Info
        };
    }

    /// Pretty JSON; keys follow field order and maps are sorted, so output is stable.
    /// Non-finite numbers are written as `null`.
    pub fn to_json(&self) -> crate::Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| crate::Error::Io(std::io::Error::other(e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_verdicts() {
        let a = BoundReport::new("x", "").constant("sup", 1.0);
        let b = BoundReport::new("x", "").constant("sup", 1.03);
        assert!(a.clone().with_refinement(&b, 0.05).passed());
        let c = BoundReport::new("x", "").constant("sup", 1.2);
        assert!(!a.clone().with_refinement(&c, 0.05).passed());
        let d = BoundReport::new("x", "").constant("sup", f64::INFINITY);
        assert!(!a.with_refinement(&d, 0.05).passed());
    }

    #[test]
    fn empty_run_report_is_valid_json() {
        let mut r = RunReport::new(Provenance {
            config_hash: "0".into(),
            version: "v".into(),
            pipeline: "verify".into(),
            preset: None,
            seed: 1,
            timestamp: 0,
        });
        r.finalize();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["status"], "info");
        assert_eq!(v["plots"]["slices"], serde_json::json!([]));
        for k in ["reports", "criteria", "convergence", "artifacts"] {
            assert_eq!(v[k], serde_json::json!([]), "{k}");
        }
    }

    #[test]
    fn json_round_trip() {
        let r = BoundReport::new("id", "d").constant("c", 2.0).witness("w", vec![1.0], 3.0);
        let s = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&s).unwrap();
        assert_eq!(r, back);
    }
}
