use nalgebra::{DMatrix, DVector};

use super::gamma::GammaPolynomial;
use super::moments::CrossMoments;
use super::shift::ShiftPoly;
use crate::error::Result;
use crate::linalg::{trace_of_product, Factorized};

/// The oblique annihilator `M_Γ = I − X S^{-1} X'(I−Γ)`, `S = X'(I−Γ)X`,
/// represented through `S` and the cross-moment cache of `X`.
///
/// Traces of `P · M_Γ` for any shift polynomial `P` cost one K×K trace:
/// `tr(P M_Γ) = tr(P) − tr(S^{-1} X'(I−Γ) P X)`.
#[derive(Debug, Clone)]
pub struct ObliqueProjector<'a> {
    mom: &'a CrossMoments,
    gamma: GammaPolynomial,
    transform: ShiftPoly,
    s: Factorized,
}

/// The two traces entering the Gaussian variance inflation, for
/// `B = D'(I−Γ)M_Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiTerms {
    pub trace_b2: f64,
    pub trace_btb: f64,
}

impl PsiTerms {
    pub fn psi(&self) -> f64 {
        self.trace_b2.abs() / self.trace_btb
    }
}

impl<'a> ObliqueProjector<'a> {
    pub fn new(mom: &'a CrossMoments, gamma: &GammaPolynomial) -> Result<Self> {
        let transform = gamma.transform();
        let s = Factorized::new(mom.quad(&transform))?;
        Ok(Self {
            mom,
            gamma: gamma.clone(),
            transform,
            s,
        })
    }

    pub fn moments(&self) -> &'a CrossMoments {
        self.mom
    }

    pub fn gamma(&self) -> &GammaPolynomial {
        &self.gamma
    }

    /// `I − Γ`.
    pub fn transform(&self) -> &ShiftPoly {
        &self.transform
    }

    /// Factorization of `S = X'(I−Γ)X`.
    pub fn s(&self) -> &Factorized {
        &self.s
    }

    /// `tr(P M_Γ)`.
    pub fn trace_left(&self, p: &ShiftPoly) -> f64 {
        let t = self.mom.t();
        p.trace(t) - self.s.trace_solve(&self.mom.quad(&(&self.transform * p)))
    }

    /// `tr(P (I−Γ) M_Γ)`.
    pub fn trace_with(&self, p: &ShiftPoly) -> f64 {
        self.trace_left(&(p * &self.transform))
    }

    /// `tr[(D')^ℓ (I−Γ) M_Γ]` for `ℓ = 1..=lags`.
    pub fn lead_traces(&self, lags: usize) -> Vec<f64> {
        (1..=lags)
            .map(|l| self.trace_with(&ShiftPoly::lead(l)))
            .collect()
    }

    /// `tr[(I−Γ) M_Γ]`, exactly `T − K` when `Γ = 0`.
    pub fn effective_dof(&self) -> f64 {
        if self.gamma.is_zero() {
            (self.mom.t() - self.mom.k()) as f64
        } else {
            self.trace_left(&self.transform)
        }
    }

    /// `S^{-1} X'(I−Γ) y`.
    pub fn coefficients(&self, y: &DVector<f64>) -> DVector<f64> {
        self.s.solve(&self.mom.cross(&self.transform, y))
    }

    /// Row vector `r' S^{-1} X'(I−Γ)`, returned as a column.
    pub fn contrast_weights(&self, r: &DVector<f64>) -> DVector<f64> {
        let b = self.s.solve_transpose(r);
        self.transform.transpose().apply(&(self.mom.x() * b))
    }

    pub fn psi_terms(&self) -> PsiTerms {
        let t = self.mom.t();
        let r = &self.transform;
        let p = &ShiftPoly::lead(1) * r;
        let pt = p.transpose();
        let inv = self.s.inverse();

        let pp = &p * &p;
        let q = inv * self.mom.quad(&(r * &p));
        let trace_b2 = pp.trace(t) - 2.0 * self.s.trace_solve(&self.mom.quad(&(r * &pp)))
            + trace_of_product(&q, &q);

        let ptp = &pt * &p;
        let u: DMatrix<f64> = inv.tr_mul(&self.mom.quad(&ptp));
        let v = inv * self.mom.quad(&(r * &r.transpose()));
        let trace_btb = ptp.trace(t) - 2.0 * self.s.trace_solve(&self.mom.quad(&(r * &ptp)))
            + trace_of_product(&u, &v);

        PsiTerms {
            trace_b2,
            trace_btb,
        }
    }
}

/// `(g_1, …, g_L)` with `g_ℓ = tr[(D')^ℓ (I−Γ) M_Γ]`, `L` the length of `g`.
pub fn trace_equation_values(mom: &CrossMoments, g: &GammaPolynomial) -> Result<Vec<f64>> {
    Ok(ObliqueProjector::new(mom, g)?.lead_traces(g.lags()))
}

/// `T − K_Γ = tr[(I−Γ) M_Γ]`.
pub fn effective_dof(mom: &CrossMoments, g: &GammaPolynomial) -> Result<f64> {
    Ok(ObliqueProjector::new(mom, g)?.effective_dof())
}
