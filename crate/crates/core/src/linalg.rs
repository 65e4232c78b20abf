//! Small dense helpers shared by the estimators: a pivoted-LU factorization
//! with a condition check and one-step iterative refinement, and a numerical
//! rank computed from singular values.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

/// Condition estimate above which a K×K system is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Condition estimate above which solves get a refinement pass.
pub const REFINE_CONDITION: f64 = 1e10;

/// LU factorization (partial pivoting) of a square matrix together with its
/// inverse and 1-norm condition number.
#[derive(Debug, Clone)]
pub struct Factorized {
    matrix: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    inverse: DMatrix<f64>,
    condition: f64,
}

impl Factorized {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput(format!(
                "expected a square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let lu = matrix.clone().lu();
        let inverse = lu.try_inverse().ok_or(Error::NearSingularTransform {
            condition: f64::INFINITY,
            threshold: SINGULAR_CONDITION,
        })?;
        let condition = norm1(&matrix) * norm1(&inverse);
        if !condition.is_finite() || condition > SINGULAR_CONDITION {
            return Err(Error::NearSingularTransform {
                condition,
                threshold: SINGULAR_CONDITION,
            });
        }
        Ok(Self {
            matrix,
            lu,
            inverse,
            condition,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.lu.solve(b).expect("factorization verified invertible");
        if self.condition > REFINE_CONDITION {
            let r = b - &self.matrix * &x;
            x += self
                .lu
                .solve(&r)
                .expect("factorization verified invertible");
        }
        x
    }

    /// Solves `A' x = b`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.inverse.tr_mul(b);
        if self.condition > REFINE_CONDITION {
            let r = b - self.matrix.tr_mul(&x);
            x += self.inverse.tr_mul(&r);
        }
        x
    }

    /// `tr(A^{-1} N)` without forming the product.
    pub fn trace_solve(&self, n: &DMatrix<f64>) -> f64 {
        trace_of_product(&self.inverse, n)
    }
}

/// `tr(A B)` in O(n²).
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        // column j of A against row j of B
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Maximum absolute column sum.
pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Rank of `x` with the usual `max(m, n) · σ_max · ε` cutoff.
pub fn numerical_rank(x: &DMatrix<f64>) -> usize {
    if x.is_empty() {
        return 0;
    }
    let sv = x.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = x.nrows().max(x.ncols()) as f64 * smax * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis for the column space of `x` (left singular vectors with
/// non-negligible singular values).
pub fn column_basis(x: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = x.nrows().max(x.ncols()) as f64 * smax * f64::EPSILON;
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(x.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}
