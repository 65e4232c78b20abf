use serde::{Deserialize, Serialize};

use super::shift::ShiftPoly;
use crate::error::{Error, Result};

/// Upper bound on `Σ|γ_ℓ|`, which bounds the operator norm of `Γ`.
pub const MAX_L1_NORM: f64 = 0.99;

// slack for coefficients that were scaled onto the boundary
const L1_SLACK: f64 = 1e-12;

/// Lag coefficients `(γ_1, …, γ_L)` of `Γ = Σ γ_ℓ D^ℓ`. `L = 0` means `Γ = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GammaPolynomial {
    coeffs: Vec<f64>,
}

impl GammaPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gamma coefficient {c} is not finite"
            )));
        }
        let l1: f64 = coeffs.iter().map(|c| c.abs()).sum();
        if l1 > MAX_L1_NORM + L1_SLACK {
            return Err(Error::InvalidInput(format!(
                "sum of |gamma| is {l1}, above the admissible bound {MAX_L1_NORM}"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(lags: usize) -> Self {
        Self {
            coeffs: vec![0.0; lags],
        }
    }

    pub fn single(gamma: f64) -> Result<Self> {
        Self::new(vec![gamma])
    }

    /// Scales `coeffs` radially onto the admissible set if needed. The flag
    /// reports whether scaling happened.
    pub fn project(coeffs: Vec<f64>) -> Result<(Self, bool)> {
        let l1: f64 = coeffs.iter().map(|c| c.abs()).sum();
        if l1 > MAX_L1_NORM && l1.is_finite() {
            let k = MAX_L1_NORM / l1;
            let scaled = coeffs.into_iter().map(|c| c * k).collect();
            Ok((Self::new(scaled)?, true))
        } else {
            Ok((Self::new(coeffs)?, false))
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn lags(&self) -> usize {
        self.coeffs.len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `Γ` as a shift polynomial.
    pub fn gamma_operator(&self) -> ShiftPoly {
        let mut p = ShiftPoly::zero();
        for (i, &c) in self.coeffs.iter().enumerate() {
            p.add_term(c, super::shift::ShiftWord::lag(i + 1));
        }
        p
    }

    /// `I − Γ` as a shift polynomial.
    pub fn transform(&self) -> ShiftPoly {
        &ShiftPoly::identity() - &self.gamma_operator()
    }
}

impl TryFrom<Vec<f64>> for GammaPolynomial {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GammaPolynomial> for Vec<f64> {
    fn from(g: GammaPolynomial) -> Self {
        g.coeffs
    }
}
