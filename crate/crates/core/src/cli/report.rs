use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticsReport;
use crate::estimators::FitResult;
use crate::inference::InferenceReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSection {
    pub outcome: String,
    pub lags: usize,
    pub ols: FitResult,
    /// Equal to `ols` when no lags are requested.
    pub iv: FitResult,
    /// `t_Δ` of the OLS–IV difference for each reported contrast.
    pub difference_t: Vec<f64>,
}

/// The JSON document written by `fit` and `diagnose`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 of the input file bytes.
    pub input_digest: String,
    pub fit: Option<FitSection>,
    pub inference: Vec<InferenceReport>,
    pub diagnostics: Option<DiagnosticsReport>,
    /// Wall-clock milliseconds.
    pub timing: f64,
    pub version: String,
}
