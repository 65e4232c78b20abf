//! Shift-operator algebra, orthogonal and oblique annihilators, and the
//! lower-diagonal traces every estimator is built from.

mod gamma;
mod moments;
mod oblique;
mod shift;

pub use gamma::{GammaPolynomial, MAX_L1_NORM};
pub use moments::CrossMoments;
pub use oblique::{effective_dof, trace_equation_values, ObliqueProjector, PsiTerms};
pub use shift::{lower_trace, shift, RowWindow, Shift, ShiftPoly, ShiftWord};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::column_basis;

/// Dense `M = I − X(X'X)^{-1}X'`, built from an SVD column basis of `X`.
///
/// This is T×T; the estimators never call it.
pub fn annihilator(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (t, k) = x.shape();
    let u = column_basis(x);
    if u.ncols() < k {
        return Err(Error::SingularDesign {
            rank: u.ncols(),
            columns: k,
        });
    }
    Ok(DMatrix::identity(t, t) - &u * u.transpose())
}
