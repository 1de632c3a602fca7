use serde::{Deserialize, Serialize};

use crate::aroc::ArocResult;
use crate::croc::CRocResult;
use crate::error::Result;
use crate::io::config::RunConfig;
use crate::model::{CovariateFrame, MissingCounts};
use crate::pooled::RocResult;
use crate::summaries::ThresholdResult;

/// Bumped whenever the payload layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Run environment; the only part of an envelope that may differ between
/// two runs with the same configuration and seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPayload {
    /// Estimator label as given on the command line.
    pub method: String,
    /// Covariate values of the rows, for covariate-specific thresholds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newdata: Option<CovariateFrame>,
    pub result: ThresholdResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "result", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum Payload {
    Pooled(RocResult),
    Croc(CRocResult),
    Aroc(ArocResult),
    Threshold(ThresholdPayload),
}

impl Payload {
    /// Moves estimator warnings out of the payload.
    fn take_warnings(&mut self) -> Vec<String> {
        match self {
            Payload::Pooled(r) => std::mem::take(&mut r.warnings),
            Payload::Croc(r) => std::mem::take(&mut r.warnings),
            Payload::Aroc(r) => std::mem::take(&mut r.warnings),
            Payload::Threshold(_) => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub schema_version: u32,
    pub config: RunConfig,
    pub timing: Timing,
    /// Rows dropped at ingestion.
    pub missing: MissingCounts,
    pub payload: Payload,
    /// Every warning raised by the run.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ResultEnvelope {
    pub fn new(config: RunConfig, timing: Timing, missing: MissingCounts, mut payload: Payload) -> Self {
        let warnings = payload.take_warnings();
        Self { schema_version: SCHEMA_VERSION, config, timing, missing, payload, warnings }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// JSON with the timing block zeroed, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut e = self.clone();
        e.timing = Timing::default();
        e.to_json()
    }
}
