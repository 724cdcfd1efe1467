//! Machine-readable run records: the echoed configuration, the gradient
//! report, and the structural-analysis block, serialized as one JSON document.

use crate::gradient::GradientReport;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Echo of everything that determines a run; always carries the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_obs_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_groups: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_subgroup: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dla: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_shadows: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_d: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    pub seed: u64,
    pub workers: usize,
}

/// Structural analysis of a parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub is_subgroup: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_blow_up: Option<String>,
    pub index_complexity: usize,
    pub well_behaved_indices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dla_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dla_blow_up: Option<String>,
    pub dla_growth: Vec<usize>,
    pub compatibility_groups: Vec<Vec<String>>,
    pub compatibility_group_count: usize,
}

/// Top-level output document of `grad` and `analyze`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<GradientReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisReport>,
    pub timing_ms: f64,
}

impl ResultDocument {
    pub fn new(config: RunConfig) -> Self {
        ResultDocument {
            schema_version: SCHEMA_VERSION,
            config,
            report: None,
            analysis: None,
            timing_ms: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| crate::Error::Parse(format!("result document: {e}")))
    }
}
