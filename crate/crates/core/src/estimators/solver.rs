use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Factorized;
use crate::projections::{
    trace_equation_values, CrossMoments, GammaPolynomial, ObliqueProjector, ShiftPoly, MAX_L1_NORM,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Fixed point: bound on successive iterates. Newton: `‖g‖∞ ≤ tol·(T−K)`.
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian_step: f64,
    /// Starting point; zeros when absent or of the wrong length.
    pub initial: Option<GammaPolynomial>,
    /// Log a warning when `K ≥ T/5`. Batch callers turn this off and warn once.
    pub warn_many_regressors: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 500,
            jacobian_step: 1e-7,
            initial: None,
            warn_many_regressors: true,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.jacobian_step > 0.0) {
            return Err(Error::InvalidInput(
                "solver needs tol > 0, max_iter >= 1 and jacobian_step > 0".into(),
            ));
        }
        Ok(())
    }

    fn start(&self, lags: usize) -> GammaPolynomial {
        match &self.initial {
            Some(g) if g.lags() == lags => g.clone(),
            _ => GammaPolynomial::zeros(lags),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSolution {
    pub gamma: GammaPolynomial,
    pub iterations: usize,
    /// Value of the solved equation(s) at `gamma`.
    pub residual: Vec<f64>,
    /// An iterate left the admissible set and was scaled back.
    pub projected: bool,
}

/// `f̂(γ) = tr(D'M_Γ)/(T−K)` for `Γ = γD`.
pub fn fixed_point_map(mom: &CrossMoments, gamma: f64) -> Result<f64> {
    let g = GammaPolynomial::single(gamma)?;
    let proj = ObliqueProjector::new(mom, &g)?;
    Ok(proj.trace_left(&ShiftPoly::lead(1)) / (mom.t() - mom.k()) as f64)
}

fn warn_if_many(mom: &CrossMoments, cfg: &SolverConfig) {
    if cfg.warn_many_regressors && 5 * mom.k() >= mom.t() {
        warn!(
            "K = {} is at least T/5 = {:.1}; the gamma solver is not guaranteed to converge",
            mom.k(),
            mom.t() as f64 / 5.0
        );
    }
}

/// Single-lag `γ̂` by iterating `γ ← f̂(γ)`.
pub fn solve_gamma(data: &Dataset, cfg: &SolverConfig) -> Result<GammaSolution> {
    solve_gamma_moments(data.moments(), cfg)
}

/// [`solve_gamma`] on a bare regressor matrix.
pub fn solve_gamma_moments(mom: &CrossMoments, cfg: &SolverConfig) -> Result<GammaSolution> {
    cfg.validate()?;
    warn_if_many(mom, cfg);
    let dof = (mom.t() - mom.k()) as f64;
    let mut gamma = cfg.start(1).coeffs()[0];
    let mut projected = false;
    for it in 1..=cfg.max_iter {
        let mut next = fixed_point_map(mom, gamma)?;
        if next.abs() > MAX_L1_NORM {
            next = next.signum() * MAX_L1_NORM;
            projected = true;
        }
        let step = (next - gamma).abs();
        gamma = next;
        if step <= cfg.tol {
            let resid = (fixed_point_map(mom, gamma)? - gamma) * dof;
            return Ok(GammaSolution {
                gamma: GammaPolynomial::single(gamma)?,
                iterations: it,
                residual: vec![resid],
                projected,
            });
        }
    }
    let resid = (fixed_point_map(mom, gamma)? - gamma) * dof;
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        last: vec![gamma],
        residual: resid.abs(),
    })
}

/// `L`-lag `γ̂` solving `tr[(D')^ℓ (I−Γ) M_Γ] = 0` for `ℓ = 1..=L` by damped
/// Newton with a forward-difference Jacobian.
pub fn solve_gamma_multi(data: &Dataset, lags: usize, cfg: &SolverConfig) -> Result<GammaSolution> {
    solve_gamma_multi_moments(data.moments(), lags, cfg)
}

/// [`solve_gamma_multi`] on a bare regressor matrix.
pub fn solve_gamma_multi_moments(
    mom: &CrossMoments,
    lags: usize,
    cfg: &SolverConfig,
) -> Result<GammaSolution> {
    cfg.validate()?;
    if lags == 0 || 4 * lags >= mom.t() {
        return Err(Error::InvalidInput(format!(
            "need 1 <= L < T/4 (L = {lags}, T = {})",
            mom.t()
        )));
    }
    warn_if_many(mom, cfg);
    let target = cfg.tol * (mom.t() - mom.k()) as f64;
    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sq_norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();

    let mut gamma = cfg.start(lags);
    let mut value = trace_equation_values(mom, &gamma)?;
    let mut projected = false;

    for it in 0..cfg.max_iter {
        if inf_norm(&value) <= target {
            return Ok(GammaSolution {
                gamma,
                iterations: it,
                residual: value,
                projected,
            });
        }
        let jac = jacobian(mom, &gamma, &value, cfg.jacobian_step)?;
        let step = Factorized::new(jac)?.solve(&DVector::from_column_slice(&value));

        let base = sq_norm(&value);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = gamma
                .coeffs()
                .iter()
                .zip(step.iter())
                .map(|(g, s)| g - lambda * s)
                .collect();
            let (cand, flagged) = GammaPolynomial::project(cand)?;
            if let Ok(v) = trace_equation_values(mom, &cand) {
                if sq_norm(&v) < base {
                    accepted = Some((cand, v, flagged));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((g, v, flagged)) => {
                gamma = g;
                value = v;
                projected |= flagged;
            }
            None => break,
        }
    }
    if inf_norm(&value) <= target {
        return Ok(GammaSolution {
            gamma,
            iterations: cfg.max_iter,
            residual: value,
            projected,
        });
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        last: gamma.coeffs().to_vec(),
        residual: inf_norm(&value),
    })
}

fn jacobian(
    mom: &CrossMoments,
    gamma: &GammaPolynomial,
    value: &[f64],
    h: f64,
) -> Result<DMatrix<f64>> {
    let l = gamma.lags();
    let mut jac = DMatrix::zeros(l, l);
    for j in 0..l {
        let mut shifted = gamma.coeffs().to_vec();
        // step inward so the probe stays admissible near the boundary
        let dir = if gamma.l1_norm() + h > MAX_L1_NORM && shifted[j] != 0.0 {
            -shifted[j].signum()
        } else {
            1.0
        };
        shifted[j] += dir * h;
        let (probe, _) = GammaPolynomial::project(shifted)?;
        let v = trace_equation_values(mom, &probe)?;
        for i in 0..l {
            jac[(i, j)] = (v[i] - value[i]) / (dir * h);
        }
    }
    Ok(jac)
}

/// Dispatches on the number of lags: none returns `Γ = 0`, one uses the fixed
/// point, more use Newton.
pub fn solve(data: &Dataset, lags: usize, cfg: &SolverConfig) -> Result<GammaSolution> {
    match lags {
        0 => Ok(GammaSolution {
            gamma: GammaPolynomial::zeros(0),
            iterations: 0,
            residual: Vec::new(),
            projected: false,
        }),
        1 => solve_gamma(data, cfg),
        _ => solve_gamma_multi(data, lags, cfg),
    }
}
