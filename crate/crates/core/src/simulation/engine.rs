use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{draw_sample, rng_for, DgpSpec, Gaussian, Innovations, Process};
use crate::error::{Error, Result};
use crate::estimators::{fit_solution, ols_fit, solve, SolverConfig};
use crate::inference::{
    contrast_se, difference_test, iv_bias_with, variance_bias_with, ContrastSpec, InferenceConfig,
    OracleInputs, Regime,
};
use crate::projections::{CrossMoments, GammaPolynomial, ObliqueProjector, ShiftPoly};

/// Environment variable capping the worker count; `0` or unset means all cores.
pub const THREADS_ENV: &str = "FEEDBACK_IV_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Contrast {
    /// `r = Σ_ℓ α_ℓ`
    #[default]
    #[serde(alias = "feedback")]
    FeedbackDirection,
    Coordinate(usize),
}

impl Contrast {
    pub fn vector(&self, spec: &DgpSpec) -> Result<DVector<f64>> {
        match *self {
            Contrast::FeedbackDirection => {
                let r = spec
                    .alpha_vectors()
                    .into_iter()
                    .fold(DVector::zeros(spec.k), |acc, a| acc + a);
                if r.iter().all(|&v| v == 0.0) {
                    return Err(Error::InvalidInput(
                        "feedback direction is undefined without feedback".into(),
                    ));
                }
                Ok(r)
            }
            Contrast::Coordinate(k) => Ok(ContrastSpec::coordinate(spec.k, k, "")?.r),
        }
    }
}

#[derive(Debug, Clone)]
pub struct McOptions {
    /// Lags of the fitted `Γ`; `None` uses the number of feedback vectors.
    pub lags: Option<usize>,
    pub solver: SolverConfig,
    pub inference: InferenceConfig,
    /// Worker count; `None` reads the environment, `Some(0)` means all cores.
    pub threads: Option<usize>,
    /// Also evaluate the bias and variance oracles each replication.
    pub oracles: bool,
    pub innovations: Arc<dyn Innovations>,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            lags: None,
            solver: SolverConfig::default(),
            inference: InferenceConfig::default(),
            threads: None,
            oracles: false,
            innovations: Arc::new(Gaussian),
        }
    }
}

/// Oracle values for one replication's `X̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    pub ols_bias: f64,
    pub ols_variance_ratio: f64,
}

/// Everything recorded for one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub ols_estimate: f64,
    pub ols_se: f64,
    pub iv_estimate: f64,
    pub iv_se: f64,
    pub sigma2_ols: f64,
    pub sigma2_iv: f64,
    pub gamma: Vec<f64>,
    pub solver_residual: Vec<f64>,
    /// `|tr(D'M)|/T` of the observed regressors.
    pub lower_trace_ratio: f64,
    /// `t_Δ` for the OLS–IV difference, using the IV variance estimate.
    pub diff_t: f64,
    pub oracle: Option<OracleOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub bias: f64,
    pub sd: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub ols: EstimatorSummary,
    pub iv: EstimatorSummary,
    pub lower_trace_ratio: f64,
    pub n_reps: usize,
    pub failures: usize,
    pub seed: u64,
    /// The true `r'β`.
    pub truth: f64,
}

pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Runs `f` on a pool of `threads` workers (`0` = all cores).
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn replicate(
    spec: &DgpSpec,
    fixed: Option<&nalgebra::DMatrix<f64>>,
    r: &ContrastSpec,
    lags: usize,
    seed: u64,
    rep: u64,
    opts: &McOptions,
) -> Result<RepOutcome> {
    let mut rng = rng_for(seed, rep);
    let sample = draw_sample(spec, fixed, opts.innovations.as_ref(), &mut rng)?;
    let data = &sample.data;
    let cfg = &opts.inference;

    let ols = ols_fit(data)?;
    let ols_inf = contrast_se(data, &ols.gamma, &ols, r, Regime::ModerateK, cfg)?;
    let sol = solve(data, lags, &opts.solver)?;
    let iv = fit_solution(data, &sol)?;
    let iv_inf = contrast_se(data, &iv.gamma, &iv, r, Regime::ModerateK, cfg)?;
    let (_, _, diff_t) = difference_test(data, &ols, &iv, iv.sigma2, r)?;

    let zero = ObliqueProjector::new(data.moments(), &GammaPolynomial::zeros(0))?;
    let lower_trace_ratio = zero.trace_left(&ShiftPoly::lead(1)).abs() / spec.t as f64;

    let oracle = if opts.oracles && spec.lags() == 1 {
        let mom = CrossMoments::new(sample.x_tilde.clone());
        let inputs = OracleInputs {
            x_tilde: sample.x_tilde,
            alphas: spec.alpha_vectors(),
            sigma2: spec.sigma2,
            r: r.r.clone(),
        };
        let zeros = GammaPolynomial::zeros(1);
        Some(OracleOutcome {
            ols_bias: iv_bias_with(&mom, &inputs, &zeros)?,
            ols_variance_ratio: variance_bias_with(&mom, &inputs, &zeros)?,
        })
    } else {
        None
    };

    Ok(RepOutcome {
        ols_estimate: ols_inf.estimate,
        ols_se: ols_inf.se,
        iv_estimate: iv_inf.estimate,
        iv_se: iv_inf.se,
        sigma2_ols: ols.sigma2,
        sigma2_iv: iv.sigma2,
        gamma: sol.gamma.coeffs().to_vec(),
        solver_residual: sol.residual,
        lower_trace_ratio,
        diff_t,
        oracle,
    })
}

/// Runs every replication and returns the per-replication results in index
/// order, whatever the number of workers.
pub fn run_replications(
    spec: &DgpSpec,
    n_reps: usize,
    contrast: Contrast,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<Result<RepOutcome>>> {
    spec.validate()?;
    if n_reps < 2 {
        return Err(Error::InvalidInput("need at least two replications".into()));
    }
    let r = ContrastSpec::new(contrast.vector(spec)?, "contrast")?;
    let lags = opts.lags.unwrap_or(spec.lags().max(1));
    let fixed = match spec.process {
        Process::FixedBase => spec.base_matrix(),
        _ => None,
    };
    if opts.solver.warn_many_regressors && 5 * spec.k >= spec.t {
        log::warn!(
            "K = {} is at least T/5 = {:.1}; the gamma solver is not guaranteed to converge",
            spec.k,
            spec.t as f64 / 5.0
        );
    }
    let mut quiet = opts.clone();
    quiet.solver.warn_many_regressors = false;
    let threads = opts.threads.unwrap_or_else(threads_from_env);
    with_pool(threads, || {
        (0..n_reps as u64)
            .into_par_iter()
            .map(|i| replicate(spec, fixed.as_ref(), &r, lags, seed, i, &quiet))
            .collect()
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn estimator_summary(est: &[f64], se: &[f64], truth: f64, critical: f64) -> EstimatorSummary {
    let (mean, sd) = mean_sd(est);
    let rejections = est
        .iter()
        .zip(se)
        .filter(|(e, s)| ((*e - truth) / *s).abs() > critical)
        .count();
    EstimatorSummary {
        bias: mean - truth,
        sd,
        size: rejections as f64 / est.len() as f64,
    }
}

/// Aggregates replications in index order. More than 1% failures is an error.
pub fn summarize(
    outcomes: &[Result<RepOutcome>],
    truth: f64,
    seed: u64,
    critical: f64,
) -> Result<McSummary> {
    let n_reps = outcomes.len();
    let ok: Vec<&RepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failures = n_reps - ok.len();
    if failures * 100 > n_reps || ok.len() < 2 {
        if let Some(Err(e)) = outcomes.iter().find(|o| o.is_err()) {
            log::error!("first replication failure: {e}");
        }
        return Err(Error::TooManyFailures { failures, n_reps });
    }
    let col = |f: fn(&RepOutcome) -> f64| ok.iter().map(|o| f(o)).collect::<Vec<_>>();
    let ols = estimator_summary(
        &col(|o| o.ols_estimate),
        &col(|o| o.ols_se),
        truth,
        critical,
    );
    let iv = estimator_summary(&col(|o| o.iv_estimate), &col(|o| o.iv_se), truth, critical);
    let (ltr, _) = mean_sd(&col(|o| o.lower_trace_ratio));
    Ok(McSummary {
        ols,
        iv,
        lower_trace_ratio: ltr,
        n_reps,
        failures,
        seed,
        truth,
    })
}

/// Monte Carlo bias, spread and size of OLS and the IV estimator.
pub fn run_monte_carlo(
    spec: &DgpSpec,
    n_reps: usize,
    contrast: Contrast,
    seed: u64,
) -> Result<McSummary> {
    run_monte_carlo_with(spec, n_reps, contrast, seed, &McOptions::default())
}

pub fn run_monte_carlo_with(
    spec: &DgpSpec,
    n_reps: usize,
    contrast: Contrast,
    seed: u64,
    opts: &McOptions,
) -> Result<McSummary> {
    let outcomes = run_replications(spec, n_reps, contrast, seed, opts)?;
    let truth = contrast.vector(spec)?.dot(&spec.beta_vector());
    summarize(&outcomes, truth, seed, opts.inference.critical)
}
