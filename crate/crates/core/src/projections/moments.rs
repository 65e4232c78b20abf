use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::shift::{ShiftPoly, ShiftWord};

/// Cross-moment cache for a fixed regressor matrix.
///
/// Every quadratic form `X' W X` with `W` a shift word reduces to a lagged
/// product `G_m = Σ_s x_s x_{s+m}'` minus a few boundary outer products, so
/// only the `G_m` actually requested are ever formed.
#[derive(Debug, Clone)]
pub struct CrossMoments {
    x: DMatrix<f64>,
    lagged: Vec<OnceLock<DMatrix<f64>>>,
}

impl CrossMoments {
    pub fn new(x: DMatrix<f64>) -> Self {
        let t = x.nrows();
        Self {
            x,
            lagged: (0..t).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn into_x(self) -> DMatrix<f64> {
        self.x
    }

    pub fn t(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// `G_m = Σ_{s < T−m} x_s x_{s+m}' = X'(D')^m X`.
    pub fn lagged(&self, m: usize) -> &DMatrix<f64> {
        self.lagged[m].get_or_init(|| {
            let n = self.t() - m;
            self.x.rows(0, n).tr_mul(&self.x.rows(m, n))
        })
    }

    /// `A_{a,b} = X'(D')^a D^b X`.
    pub fn block(&self, a: usize, b: usize) -> DMatrix<f64> {
        self.word_quad(&ShiftWord::from_factors(vec![
            super::shift::Shift::Lead(a),
            super::shift::Shift::Lag(b),
        ]))
    }

    /// `X' W X` for a single shift word.
    pub fn word_quad(&self, w: &ShiftWord) -> DMatrix<f64> {
        let (t, k) = (self.t(), self.k());
        let win = w.window(t);
        if win.is_empty() {
            return DMatrix::zeros(k, k);
        }
        let m = win.offset.unsigned_abs();
        let n = win.len();
        let (full_lo, full_hi) = if win.offset >= 0 { (0, t - m) } else { (m, t) };
        let boundary = (full_hi - full_lo) - n;
        let partner = |s: usize| (s as isize + win.offset) as usize;

        if boundary >= n {
            let lo = win.lo;
            return self.x.rows(lo, n).tr_mul(&self.x.rows(partner(lo), n));
        }
        let mut out = if win.offset >= 0 {
            self.lagged(m).clone()
        } else {
            self.lagged(m).transpose()
        };
        for s in (full_lo..win.lo).chain(win.hi..full_hi) {
            let a = self.x.row(s).transpose();
            let b = self.x.row(partner(s)).transpose();
            out.ger(-1.0, &a, &b, 1.0);
        }
        out
    }

    /// `X' P X` for a shift polynomial.
    pub fn quad(&self, p: &ShiftPoly) -> DMatrix<f64> {
        let k = self.k();
        let mut out = DMatrix::zeros(k, k);
        for (w, c) in p.terms() {
            out += self.word_quad(w) * c;
        }
        out
    }

    /// `X' P v`.
    pub fn cross(&self, p: &ShiftPoly, v: &DVector<f64>) -> DVector<f64> {
        self.x.tr_mul(&p.apply(v))
    }
}
