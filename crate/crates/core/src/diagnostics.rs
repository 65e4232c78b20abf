//! Pre-estimation warnings: how predictable the regressors are from their own
//! past, whether the solvability condition holds, and how strong the
//! estimated feedback is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_solution, ols_fit, solve_gamma, Dataset, SolverConfig};
use crate::inference::{difference_test, ContrastSpec};
use crate::projections::{GammaPolynomial, ObliqueProjector, ShiftPoly};
use crate::simulation::feedback_alpha;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Green,
    Amber,
    Red,
}

/// Cut-offs on `|tr(D'M)|/T`: green below `amber`, red above `red`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierThresholds {
    pub amber: f64,
    pub red: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        Self {
            amber: 0.05,
            red: 0.10,
        }
    }
}

impl TierThresholds {
    pub fn classify(&self, ratio: f64) -> Tier {
        let r = ratio.abs();
        if r < self.amber {
            Tier::Green
        } else if r <= self.red {
            Tier::Amber
        } else {
            Tier::Red
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// `tr((D')^ℓ M)/T` for `ℓ = 1..=L_max`.
    pub lower_trace_ratios: Vec<f64>,
    pub k_over_t: f64,
    /// `K < T/5`, the sufficient condition for a unique solvable `γ`.
    pub unique_root_ok: bool,
    /// `sqrt(|tr(D'M)|/K)` clipped to `[0, 1]`.
    pub mu: f64,
    /// `K < T / (1 + (1 + μ)²)`.
    pub mu_bound_ok: bool,
    pub estimated_alpha: Vec<f64>,
    /// `t_Δ` for the OLS–IV difference along the estimated feedback direction.
    /// The direction is fitted to the same residuals, so even without feedback
    /// this is not standard normal; it grows roughly like `sqrt(K)`.
    pub alpha_t_stat: f64,
    pub tier: Tier,
    pub thresholds: TierThresholds,
}

pub fn diagnose(data: &Dataset, l_max: usize) -> Result<DiagnosticsReport> {
    diagnose_with(
        data,
        l_max,
        TierThresholds::default(),
        &SolverConfig::default(),
    )
}

pub fn diagnose_with(
    data: &Dataset,
    l_max: usize,
    thresholds: TierThresholds,
    solver: &SolverConfig,
) -> Result<DiagnosticsReport> {
    let (t, k) = (data.t(), data.k());
    if l_max == 0 || l_max >= t {
        return Err(Error::InvalidInput(format!(
            "need 1 <= L_max < T (L_max = {l_max}, T = {t})"
        )));
    }
    let zero = ObliqueProjector::new(data.moments(), &GammaPolynomial::zeros(0))?;
    let lower_trace_ratios: Vec<f64> = (1..=l_max)
        .map(|l| zero.trace_left(&ShiftPoly::lead(l)) / t as f64)
        .collect();
    let lower1 = lower_trace_ratios[0] * t as f64;
    let mu = (lower1.abs() / k as f64).sqrt().clamp(0.0, 1.0);
    let kf = k as f64;

    let ols = ols_fit(data)?;
    let e = data.y() - data.x() * &ols.beta;
    let alpha_t_stat;
    let estimated_alpha;
    if e.norm_squared() > 0.0 {
        let alpha = feedback_alpha(data.x(), &e);
        estimated_alpha = alpha.iter().copied().collect();
        alpha_t_stat = match ContrastSpec::new(alpha, "feedback") {
            Ok(r) => {
                let sol = solve_gamma(data, solver)?;
                let iv = fit_solution(data, &sol)?;
                difference_test(data, &ols, &iv, iv.sigma2, &r)?.2
            }
            Err(_) => 0.0,
        };
    } else {
        estimated_alpha = vec![0.0; k];
        alpha_t_stat = 0.0;
    }

    Ok(DiagnosticsReport {
        k_over_t: kf / t as f64,
        unique_root_ok: 5 * k < t,
        mu,
        mu_bound_ok: kf < t as f64 / (1.0 + (1.0 + mu).powi(2)),
        tier: thresholds.classify(lower_trace_ratios[0]),
        lower_trace_ratios,
        estimated_alpha,
        alpha_t_stat,
        thresholds,
    })
}
