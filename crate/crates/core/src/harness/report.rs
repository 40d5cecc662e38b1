//! Machine-readable evaluation report: per-agent per-condition judge
//! correctness, sanity ratios, and oracle residuals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::harness::judge::PairVerdict;
use crate::harness::sanity::SanityReport;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Mean pairwise correctness against configured weights (over replicates).
    pub correctness: f64,
    /// Correctness over pairs with weight ratio >= 2; absent when no pair
    /// qualifies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correctness_high_contrast: Option<f64>,
    pub replicates: usize,
    /// Verdicts of the first replicate, as an example of the judged pairs.
    pub pairs: Vec<PairVerdict>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AgentReport {
    pub weights: Vec<f64>,
    /// Keyed by condition slug: "h", "fs", "h_rd", "fs_rd".
    pub conditions: BTreeMap<String, ConditionReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub mdps_checked: usize,
    /// Largest |sum of per-head VI - scalar VI| over all state-action pairs.
    pub max_vi_residual: f64,
    /// Largest |converged learner sum - scalar VI| over reachable pairs.
    pub max_learner_residual: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub agents: BTreeMap<String, AgentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sanity: Option<SanityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}
