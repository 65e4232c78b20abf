//! Bias-corrected estimation and inference for linear time-series regressions
//! whose regressors respond to past errors.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod linalg;
pub mod preprocess;
pub mod projections;
pub mod simulation;

pub use error::{Error, Result};

#[cfg(test)]
#[path = "../tests/common/dense.rs"]
mod dense;
