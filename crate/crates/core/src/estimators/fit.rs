use nalgebra::DVector;
use serde::{Serialize, Serializer};

use super::dataset::Dataset;
use super::solver::GammaSolution;
use crate::error::{Error, Result};
use crate::projections::{GammaPolynomial, ObliqueProjector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    #[serde(serialize_with = "as_slice")]
    pub beta: DVector<f64>,
    pub sigma2: f64,
    /// `T − K` for OLS, `T − K_Γ` otherwise.
    pub dof: f64,
    pub gamma: GammaPolynomial,
    pub solver_iterations: usize,
    pub solver_residual: Vec<f64>,
    /// True when the solver had to pull an iterate back into the admissible set.
    pub projected: bool,
}

pub(crate) fn as_slice<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

/// Least squares. Shares the code path of [`iv_fit`] with `Γ = 0`, so the two
/// agree bit for bit.
pub fn ols_fit(data: &Dataset) -> Result<FitResult> {
    iv_fit(data, &GammaPolynomial::zeros(0))
}

/// `β̂ = (X'(I−Γ)X)^{-1} X'(I−Γ)y`, `σ̂² = y'(I−Γ)M_Γ y / (T − K_Γ)`.
pub fn iv_fit(data: &Dataset, g: &GammaPolynomial) -> Result<FitResult> {
    let proj = ObliqueProjector::new(data.moments(), g)?;
    fit_with(&proj, data.y())
}

/// [`iv_fit`] at a solved `Γ̂`, carrying the solver's diagnostics along.
pub fn fit_solution(data: &Dataset, sol: &GammaSolution) -> Result<FitResult> {
    let mut fit = iv_fit(data, &sol.gamma)?;
    fit.solver_iterations = sol.iterations;
    fit.solver_residual = sol.residual.clone();
    fit.projected = sol.projected;
    Ok(fit)
}

pub(crate) fn fit_with(proj: &ObliqueProjector<'_>, y: &DVector<f64>) -> Result<FitResult> {
    let beta = proj.coefficients(y);
    let resid = y - proj.moments().x() * &beta;
    let dof = proj.effective_dof();
    if !(dof > 0.0) {
        return Err(Error::InvalidInput(format!(
            "effective degrees of freedom {dof} are not positive"
        )));
    }
    // y'(I−Γ)M_Γ y = e'(I−Γ)e since X'(I−Γ)e = 0; tiny negatives are rounding
    let quad = resid.dot(&proj.transform().apply(&resid));
    Ok(FitResult {
        beta,
        sigma2: quad.max(0.0) / dof,
        dof,
        gamma: proj.gamma().clone(),
        solver_iterations: 0,
        solver_residual: Vec::new(),
        projected: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use nalgebra::DMatrix;

    #[test]
    fn noiseless_fit() {
        let x = dense::random_design(12, 3, 1);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let data = Dataset::unlabeled(x.clone(), &x * &b).unwrap();
        let fit = ols_fit(&data).unwrap();
        assert!((fit.beta - b).norm() < 1e-12);
        assert!(fit.sigma2 < 1e-24);
        assert_eq!(fit.dof, 9.0);
    }

    #[test]
    fn identity_block_design() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let data = Dataset::unlabeled(x, DVector::from_vec(vec![3.0, 5.0, 0.0])).unwrap();
        let fit = ols_fit(&data).unwrap();
        assert_eq!(fit.beta.as_slice(), &[3.0, 5.0]);
    }

    #[test]
    fn ols_matches_normal_equations() {
        let x = dense::random_design(30, 3, 5);
        let y = dense::random_vector(30, 6);
        let data = Dataset::unlabeled(x.clone(), y.clone()).unwrap();
        let fit = ols_fit(&data).unwrap();
        let expect = dense::inverse(&x.tr_mul(&x)) * x.tr_mul(&y);
        assert!((&fit.beta - expect).norm() < 1e-12);
        let e = &y - &x * &fit.beta;
        assert!((fit.sigma2 - e.dot(&e) / 27.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gamma_is_ols_bitwise() {
        let x = dense::ar1_design(40, 4, 0.6, 2);
        let y = dense::random_vector(40, 3);
        let data = Dataset::unlabeled(x, y).unwrap();
        let ols = ols_fit(&data).unwrap();
        for l in 0..3 {
            let iv = iv_fit(&data, &GammaPolynomial::zeros(l)).unwrap();
            assert_eq!(iv.beta, ols.beta);
            assert_eq!(iv.sigma2, ols.sigma2);
            assert_eq!(iv.dof, ols.dof);
        }
    }

    #[test]
    fn iv_matches_dense() {
        let x = dense::ar1_design(35, 3, 0.5, 8);
        let y = dense::random_vector(35, 9);
        let data = Dataset::unlabeled(x.clone(), y.clone()).unwrap();
        let gammas = [0.3, -0.15];
        let fit = iv_fit(&data, &GammaPolynomial::new(gammas.to_vec()).unwrap()).unwrap();
        assert!((&fit.beta - dense::iv_beta(&x, &y, &gammas)).norm() < 1e-10);
        let s2 = dense::iv_sigma2(&x, &y, &gammas);
        assert!((fit.sigma2 - s2).abs() < 1e-10 * s2);
        assert!((fit.dof - dense::effective_dof(&x, &gammas)).abs() < 1e-9);
    }
}
