use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::numerical_rank;
use crate::projections::CrossMoments;

/// Regressors, outcome and column labels, validated once at construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    moments: CrossMoments,
    y: DVector<f64>,
    labels: Vec<String>,
}

impl Dataset {
    /// Checks shapes, finiteness, `T > K` and full column rank.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        let rank = numerical_rank(&x);
        let data = Self::trusted(x, y, labels)?;
        if rank < data.k() {
            return Err(Error::SingularDesign {
                rank,
                columns: data.k(),
            });
        }
        Ok(data)
    }

    /// Same as [`Dataset::new`] with labels `x1..xK`.
    pub fn unlabeled(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let labels = default_labels(x.ncols());
        Self::new(x, y, labels)
    }

    /// Skips the rank check, which is the only O(TK²) part of validation.
    /// Used for simulated designs whose rank is guaranteed by construction;
    /// the condition check on every factorization still applies.
    pub(crate) fn trusted(x: DMatrix<f64>, y: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        let (t, k) = x.shape();
        if k == 0 {
            return Err(Error::InvalidInput("design has no columns".into()));
        }
        if t <= k {
            return Err(Error::InvalidInput(format!(
                "need more observations than regressors (T = {t}, K = {k})"
            )));
        }
        if y.len() != t {
            return Err(Error::InvalidInput(format!(
                "outcome has {} rows but the design has {t}",
                y.len()
            )));
        }
        if labels.len() != k {
            return Err(Error::InvalidInput(format!(
                "{} labels for {k} columns",
                labels.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite regressor at row {}, column `{}`",
                i % t + 1,
                labels[i / t]
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite outcome at row {}",
                i + 1
            )));
        }
        Ok(Self {
            moments: CrossMoments::new(x),
            y,
            labels,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.moments.x()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn moments(&self) -> &CrossMoments {
        &self.moments
    }

    pub fn t(&self) -> usize {
        self.moments.t()
    }

    pub fn k(&self) -> usize {
        self.moments.k()
    }

    /// Same regressors, different outcome. Cached moments are kept.
    pub fn with_outcome(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.t() {
            return Err(Error::InvalidInput(format!(
                "outcome has {} rows but the design has {}",
                y.len(),
                self.t()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite outcome".into()));
        }
        Ok(Self {
            moments: self.moments.clone(),
            y,
            labels: self.labels.clone(),
        })
    }
}

pub(crate) fn default_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("x{i}")).collect()
}
