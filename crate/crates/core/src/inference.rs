//! Standard errors, intervals, the bias oracles and the OLS-vs-IV
//! difference test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::{Dataset, FitResult};
use crate::linalg::Factorized;
use crate::projections::{CrossMoments, GammaPolynomial, ObliqueProjector, ShiftPoly};

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSpec {
    pub r: DVector<f64>,
    pub label: String,
}

impl ContrastSpec {
    pub fn new(r: DVector<f64>, label: impl Into<String>) -> Result<Self> {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "contrast has non-finite entries".into(),
            ));
        }
        if r.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput("contrast vector is zero".into()));
        }
        Ok(Self {
            r,
            label: label.into(),
        })
    }

    /// Unit vector on coordinate `k`.
    pub fn coordinate(dim: usize, k: usize, label: impl Into<String>) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidInput(format!(
                "coordinate {k} out of range for {dim} regressors"
            )));
        }
        let mut r = DVector::zeros(dim);
        r[k] = 1.0;
        Self::new(r, label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Plain IV-type standard errors.
    #[default]
    ModerateK,
    /// Standard errors inflated by `(1 + ψ)`; conservative under Gaussian errors.
    GaussianConservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    /// Two-sided critical value.
    pub critical: f64,
    /// Hypothesized value of `r'β`.
    pub null: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            critical: 1.96,
            null: 0.0,
        }
    }
}

impl InferenceConfig {
    /// Critical value for a two-sided interval of the given coverage.
    pub fn with_level(level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidInput(format!(
                "confidence level {level} must lie in (0, 1)"
            )));
        }
        let n = Normal::standard();
        Ok(Self {
            critical: n.inverse_cdf(0.5 + level / 2.0),
            null: 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceReport {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub t_stat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub psi: f64,
    pub regime: Regime,
}

/// Inference on `r'β̂(Γ)`. The variance is `σ̂²(Γ) ‖r'S^{-1}X'(I−Γ)‖²`,
/// scaled by `1 + ψ` in the conservative regime.
pub fn contrast_se(
    data: &Dataset,
    g: &GammaPolynomial,
    fit: &FitResult,
    r: &ContrastSpec,
    regime: Regime,
    cfg: &InferenceConfig,
) -> Result<InferenceReport> {
    if r.r.len() != data.k() {
        return Err(Error::InvalidInput(format!(
            "contrast has {} entries for {} regressors",
            r.r.len(),
            data.k()
        )));
    }
    let proj = ObliqueProjector::new(data.moments(), g)?;
    let weight = proj.contrast_weights(&r.r).norm_squared();
    let psi = match regime {
        Regime::ModerateK => 0.0,
        Regime::GaussianConservative => proj.psi_terms().psi(),
    };
    let se = (fit.sigma2 * weight * (1.0 + psi)).sqrt();
    if !(se > 0.0) {
        return Err(Error::DegenerateContrast);
    }
    let estimate = r.r.dot(&fit.beta);
    Ok(InferenceReport {
        label: r.label.clone(),
        estimate,
        se,
        t_stat: (estimate - cfg.null) / se,
        ci_low: estimate - cfg.critical * se,
        ci_high: estimate + cfg.critical * se,
        psi,
        regime,
    })
}

/// Strict-exogeneity standard error of `r'(β̂_OLS − β̂(Γ))`:
/// `σ̂ ‖r'[(X'X)^{-1}X' − S^{-1}X'(I−Γ)]‖`.
pub fn diff_se(data: &Dataset, g: &GammaPolynomial, sigma2: f64, r: &ContrastSpec) -> Result<f64> {
    if g.is_zero() {
        return Ok(0.0);
    }
    let w = difference_weights(data.moments(), g, &r.r)?;
    Ok(sigma2.max(0.0).sqrt() * w.norm())
}

/// Weight vector of `r'(β̂_OLS − β̂(Γ))` as a linear function of `y`.
pub fn difference_weights(
    mom: &CrossMoments,
    g: &GammaPolynomial,
    r: &DVector<f64>,
) -> Result<DVector<f64>> {
    let ols = ObliqueProjector::new(mom, &GammaPolynomial::zeros(0))?;
    let iv = ObliqueProjector::new(mom, g)?;
    Ok(ols.contrast_weights(r) - iv.contrast_weights(r))
}

/// The `t_Δ` statistic `|r'(β̂_OLS − β̂_IV)| / se`, with `se` from [`diff_se`].
/// Returns `(difference, se, t)`; `t` is zero when `se` is.
pub fn difference_test(
    data: &Dataset,
    ols: &FitResult,
    iv: &FitResult,
    sigma2: f64,
    r: &ContrastSpec,
) -> Result<(f64, f64, f64)> {
    let diff = r.r.dot(&(&ols.beta - &iv.beta));
    let se = diff_se(data, &iv.gamma, sigma2, r)?;
    let t = if se > 0.0 { diff.abs() / se } else { 0.0 };
    Ok((diff, se, t))
}

/// True data-generating components needed by the bias oracles.
#[derive(Debug, Clone)]
pub struct OracleInputs {
    pub x_tilde: DMatrix<f64>,
    pub alphas: Vec<DVector<f64>>,
    pub sigma2: f64,
    pub r: DVector<f64>,
}

impl OracleInputs {
    fn validate(&self) -> Result<()> {
        let k = self.x_tilde.ncols();
        if self.alphas.is_empty() {
            return Err(Error::InvalidInput(
                "oracle needs at least one feedback vector".into(),
            ));
        }
        if self.alphas.iter().any(|a| a.len() != k) || self.r.len() != k {
            return Err(Error::InvalidInput(
                "oracle vectors must have K entries".into(),
            ));
        }
        if self
            .alphas
            .iter()
            .flat_map(|a| a.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(
                "feedback vectors must be finite".into(),
            ));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::InvalidInput("sigma2 must be positive".into()));
        }
        Ok(())
    }
}

/// The oracle quantities shared by the bias and variance formulas.
struct OracleParts {
    s_bar: Factorized,
    /// `tr[(D')^ℓ (I−Γ) M̃_Γ]`
    lead: Vec<f64>,
    /// `tr[D (I−Γ) M̃_Γ]`
    lag: f64,
    dof: f64,
}

fn oracle_parts(mom: &CrossMoments, o: &OracleInputs, g: &GammaPolynomial) -> Result<OracleParts> {
    let lags = o.alphas.len();
    let proj = ObliqueProjector::new(mom, g)?;
    let dof = proj.effective_dof();
    let mut s_bar = proj.s().matrix().clone();
    if lags == 1 {
        s_bar += &o.alphas[0] * o.alphas[0].transpose() * (o.sigma2 * dof);
    } else {
        for (j, aj) in o.alphas.iter().enumerate() {
            for (l, al) in o.alphas.iter().enumerate() {
                let word = &ShiftPoly::lag(l + 1) * &ShiftPoly::lead(j + 1);
                s_bar += aj * al.transpose() * (o.sigma2 * proj.trace_with(&word));
            }
        }
    }
    Ok(OracleParts {
        s_bar: Factorized::new(s_bar)?,
        lead: proj.lead_traces(lags),
        lag: proj.trace_with(&ShiftPoly::lag(1)),
        dof,
    })
}

/// Leading-order bias of `r'β̂(Γ)` under feedback `x_t = x̃_t + Σ α_ℓ ε_{t−ℓ}`.
pub fn iv_bias_oracle(o: &OracleInputs, g: &GammaPolynomial) -> Result<f64> {
    o.validate()?;
    let mom = CrossMoments::new(o.x_tilde.clone());
    iv_bias_with(&mom, o, g)
}

/// [`iv_bias_oracle`] reusing an existing moment cache of `X̃`.
pub fn iv_bias_with(mom: &CrossMoments, o: &OracleInputs, g: &GammaPolynomial) -> Result<f64> {
    let parts = oracle_parts(mom, o, g)?;
    let w = parts.s_bar.solve_transpose(&o.r);
    Ok(o.alphas
        .iter()
        .zip(&parts.lead)
        .map(|(a, tr)| o.sigma2 * w.dot(a) * tr)
        .sum())
}

/// Leading-order OLS bias with one feedback lag.
pub fn ols_bias_oracle(o: &OracleInputs) -> Result<f64> {
    if o.alphas.len() != 1 {
        return Err(Error::InvalidInput(
            "the OLS oracle takes exactly one feedback vector".into(),
        ));
    }
    iv_bias_oracle(o, &GammaPolynomial::zeros(1))
}

/// Predicted `σ̂²(Γ)/σ²` with one feedback lag.
pub fn variance_bias_oracle(o: &OracleInputs, g: &GammaPolynomial) -> Result<f64> {
    o.validate()?;
    let mom = CrossMoments::new(o.x_tilde.clone());
    variance_bias_with(&mom, o, g)
}

/// [`variance_bias_oracle`] reusing an existing moment cache of `X̃`.
pub fn variance_bias_with(
    mom: &CrossMoments,
    o: &OracleInputs,
    g: &GammaPolynomial,
) -> Result<f64> {
    if o.alphas.len() != 1 {
        return Err(Error::InvalidInput(
            "the variance oracle takes exactly one feedback vector".into(),
        ));
    }
    let parts = oracle_parts(mom, o, g)?;
    let a = &o.alphas[0];
    let quad = a.dot(&parts.s_bar.solve(a));
    Ok(1.0 - o.sigma2 * quad * parts.lead[0] * parts.lag / parts.dof)
}
