use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{default_labels, ols_fit, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Ar1,
    Ma1,
    FixedBase,
}

/// A simulable design: base regressors `x̃_t`, feedback
/// `x_t = x̃_t + Σ_ℓ α_ℓ ε_{t−ℓ}` and outcome `y = Xβ + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub process: Process,
    #[serde(default)]
    pub rho: f64,
    /// Row-major `T×K` base matrix, for `fixed_base` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<Vec<f64>>>,
    pub alphas: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
}

impl DgpSpec {
    /// Rotated AR(1) base with feedback `a` on the first regressor only.
    pub fn single_feedback(t: usize, k: usize, rho: f64, a: f64) -> Self {
        let mut alpha = vec![0.0; k];
        alpha[0] = a;
        Self {
            t,
            k,
            process: Process::Ar1,
            rho,
            base: None,
            alphas: vec![alpha],
            beta: vec![0.0; k],
            sigma2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.k == 0 || self.t <= self.k {
            return bad(format!("need 0 < K < T (T = {}, K = {})", self.t, self.k));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        match self.process {
            Process::Ar1 | Process::Ma1 => {
                if !(self.rho.abs() < 1.0) {
                    return bad(format!("rho must lie in (-1, 1), got {}", self.rho));
                }
            }
            Process::FixedBase => {
                let Some(base) = &self.base else {
                    return bad("fixed_base needs a base matrix".into());
                };
                if base.len() != self.t || base.iter().any(|r| r.len() != self.k) {
                    return bad(format!("base must be {}x{}", self.t, self.k));
                }
                if base.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("base has non-finite entries".into());
                }
            }
        }
        if self.alphas.iter().any(|a| a.len() != self.k) {
            return bad(format!("every alpha needs {} entries", self.k));
        }
        if self.beta.len() != self.k {
            return bad(format!("beta needs {} entries", self.k));
        }
        if self
            .alphas
            .iter()
            .flatten()
            .chain(&self.beta)
            .any(|v| !v.is_finite())
        {
            return bad("alphas and beta must be finite".into());
        }
        if self.t <= self.alphas.len() {
            return bad("feedback lags must be shorter than the sample".into());
        }
        Ok(())
    }

    pub fn lags(&self) -> usize {
        self.alphas.len()
    }

    pub fn alpha_vectors(&self) -> Vec<DVector<f64>> {
        self.alphas
            .iter()
            .map(|a| DVector::from_column_slice(a))
            .collect()
    }

    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }

    pub fn base_matrix(&self) -> Option<DMatrix<f64>> {
        self.base
            .as_ref()
            .map(|b| DMatrix::from_fn(self.t, self.k, |i, j| b[i][j]))
    }
}

/// Counter-style stream for replication `rep` under `seed`.
pub fn rng_for(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Source of standardized structural errors.
pub trait Innovations: Send + Sync + Debug {
    /// A draw with mean zero and unit variance.
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl Innovations for Gaussian {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.sample(StandardNormal)
    }
}

/// Student-t scaled to unit variance; needs more than two degrees of freedom.
#[derive(Debug, Clone, Copy)]
pub struct StudentT {
    dist: rand_distr::StudentT<f64>,
    scale: f64,
}

impl StudentT {
    pub fn new(df: f64) -> Result<Self> {
        if !(df > 2.0) {
            return Err(Error::InvalidInput(format!(
                "Student-t errors need df > 2 for a finite variance, got {df}"
            )));
        }
        let dist = rand_distr::StudentT::new(df)
            .map_err(|e| Error::InvalidInput(format!("Student-t: {e}")))?;
        Ok(Self {
            dist,
            scale: ((df - 2.0) / df).sqrt(),
        })
    }
}

impl Innovations for StudentT {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.scale * self.dist.sample(rng)
    }
}

fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    // row by row so the draw order does not depend on storage order
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

fn draw_raw<R: Rng>(t: usize, k: usize, process: Process, rho: f64, rng: &mut R) -> DMatrix<f64> {
    match process {
        Process::Ar1 => {
            let mut v = normal_matrix(rng, t, k);
            let sd0 = (1.0 - rho * rho).sqrt().recip();
            for j in 0..k {
                v[(0, j)] *= sd0;
            }
            for i in 1..t {
                for j in 0..k {
                    v[(i, j)] += rho * v[(i - 1, j)];
                }
            }
            v
        }
        Process::Ma1 => {
            let u = normal_matrix(rng, t + 1, k);
            DMatrix::from_fn(t, k, |i, j| u[(i + 1, j)] + rho * u[(i, j)])
        }
        Process::FixedBase => unreachable!("fixed bases are not drawn"),
    }
}

/// `X̃ = V (L')^{-1}` with `L L' = V'V/T`, so that `X̃'X̃/T = I`.
pub fn gen_base_regressors(
    t: usize,
    k: usize,
    process: Process,
    rho: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    if process == Process::FixedBase {
        return Err(Error::InvalidInput(
            "fixed_base regressors are supplied, not drawn".into(),
        ));
    }
    if k == 0 || t <= k || !(rho.abs() < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < K < T and |rho| < 1 (T = {t}, K = {k}, rho = {rho})"
        )));
    }
    for _ in 0..2 {
        let v = draw_raw(t, k, process, rho, rng);
        let gram = v.tr_mul(&v) / t as f64;
        if let Some(chol) = gram.cholesky() {
            let l = chol.l();
            if let Some(xt) = l.solve_lower_triangular(&v.transpose()) {
                return Ok(xt.transpose());
            }
        }
    }
    Err(Error::SingularDesign {
        rank: 0,
        columns: k,
    })
}

/// One draw of the design together with its base regressors.
#[derive(Debug, Clone)]
pub struct Sample {
    pub x_tilde: DMatrix<f64>,
    pub data: Dataset,
}

/// Draws `X̃` (unless fixed), then `ε_{1−L}, …, ε_T`, and assembles `X`, `y`.
pub fn draw_sample(
    spec: &DgpSpec,
    fixed_base: Option<&DMatrix<f64>>,
    innovations: &dyn Innovations,
    rng: &mut ChaCha8Rng,
) -> Result<Sample> {
    let x_tilde = match (spec.process, fixed_base) {
        (Process::FixedBase, Some(b)) => b.clone(),
        (Process::FixedBase, None) => spec
            .base_matrix()
            .ok_or_else(|| Error::InvalidInput("fixed_base needs a base matrix".into()))?,
        (p, _) => gen_base_regressors(spec.t, spec.k, p, spec.rho, rng)?,
    };
    let (t, lags) = (spec.t, spec.lags());
    let sd = spec.sigma2.sqrt();
    let eps: Vec<f64> = (0..t + lags).map(|_| sd * innovations.draw(rng)).collect();

    let mut x = x_tilde.clone();
    for (l, alpha) in spec.alphas.iter().enumerate() {
        // eps[i] is the error dated i − L
        for s in 0..t {
            let e = eps[s + lags - (l + 1)];
            for (j, a) in alpha.iter().enumerate() {
                x[(s, j)] += a * e;
            }
        }
    }
    let beta = spec.beta_vector();
    let y = &x * beta + DVector::from_column_slice(&eps[lags..]);
    let data = Dataset::trusted(x, y, default_labels(spec.k))?;
    Ok(Sample { x_tilde, data })
}

/// One simulated data set with Gaussian errors.
pub fn gen_sample(spec: &DgpSpec, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    spec.validate()?;
    Ok(draw_sample(spec, None, &Gaussian, rng)?.data)
}

/// `Σ_t x_{t+1} e_t / Σ_t e_t²`: the regression of next-period regressors on
/// today's residual.
pub fn feedback_alpha(x: &DMatrix<f64>, e: &DVector<f64>) -> DVector<f64> {
    let t = x.nrows();
    let ee = e.dot(e);
    x.rows(1, t - 1).tr_mul(&e.rows(0, t - 1)) / ee
}

/// Fixed-base design whose parameters are the OLS estimates on `(X_r, y_r)`.
pub fn calibrate_from_data(x_r: &DMatrix<f64>, y_r: &DVector<f64>) -> Result<DgpSpec> {
    let data = Dataset::unlabeled(x_r.clone(), y_r.clone())?;
    let fit = ols_fit(&data)?;
    let e = y_r - x_r * &fit.beta;
    let ee = e.dot(&e);
    if ee <= 1e-24 * y_r.dot(y_r).max(f64::MIN_POSITIVE) {
        return Err(Error::ZeroResidual);
    }
    let (t, k) = x_r.shape();
    let alpha = feedback_alpha(x_r, &e);
    Ok(DgpSpec {
        t,
        k,
        process: Process::FixedBase,
        rho: 0.0,
        base: Some(
            x_r.row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        ),
        alphas: vec![alpha.iter().copied().collect()],
        beta: fit.beta.iter().copied().collect(),
        sigma2: ee / (t - k) as f64,
    })
}
