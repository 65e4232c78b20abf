//! Lag/lead operator algebra.
//!
//! `D` is the T×T lag matrix with `D[t, t-1] = 1`; `D'` is the lead. Neither
//! is ever stored. A product of powers of `D` and `D'` applied to the rows of
//! a matrix is always a pure index shift restricted to a contiguous window of
//! rows, which is what [`RowWindow`] tracks.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lags `v` by `ell` periods: `out[t] = v[t - ell]`, zero-filled at the start.
pub fn shift(v: &DVector<f64>, ell: usize) -> DVector<f64> {
    let t = v.len();
    let mut out = DVector::zeros(t);
    if ell < t {
        out.rows_mut(ell, t - ell).copy_from(&v.rows(0, t - ell));
    }
    out
}

/// Sum of the `ell`-th subdiagonal, `Σ_t A[t, t-ell]`, i.e. `tr((D')^ell A)`.
pub fn lower_trace(a: &DMatrix<f64>, ell: usize) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "lower_trace needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let t = a.nrows();
    if ell == 0 || ell >= t {
        return Err(Error::InvalidInput(format!(
            "lower_trace offset must satisfy 1 <= ell < T (ell = {ell}, T = {t})"
        )));
    }
    Ok((ell..t).map(|i| a[(i, i - ell)]).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shift {
    /// `D^n`
    Lag(usize),
    /// `(D')^n`
    Lead(usize),
}

impl Shift {
    fn transpose(self) -> Self {
        match self {
            Shift::Lag(n) => Shift::Lead(n),
            Shift::Lead(n) => Shift::Lag(n),
        }
    }
}

/// Rows `lo..hi` of a shifted matrix equal source rows `t + offset`; every
/// other row is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowWindow {
    pub offset: isize,
    pub lo: usize,
    pub hi: usize,
}

impl RowWindow {
    pub fn full(t: usize) -> Self {
        Self {
            offset: 0,
            lo: 0,
            hi: t,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn len(&self) -> usize {
        self.hi.saturating_sub(self.lo)
    }

    fn apply(self, op: Shift, t: usize) -> Self {
        if self.is_empty() {
            return self;
        }
        match op {
            Shift::Lag(b) => Self {
                offset: self.offset - b as isize,
                lo: self.lo + b,
                hi: (self.hi + b).min(t),
            },
            Shift::Lead(a) => Self {
                offset: self.offset + a as isize,
                lo: self.lo.saturating_sub(a),
                hi: self.hi.saturating_sub(a),
            },
        }
    }
}

/// A product of shift operators in matrix order (leftmost factor first).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ShiftWord(Vec<Shift>);

impl ShiftWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn lag(n: usize) -> Self {
        Self::from_factors(vec![Shift::Lag(n)])
    }

    pub fn lead(n: usize) -> Self {
        Self::from_factors(vec![Shift::Lead(n)])
    }

    /// Builds a word, merging adjacent factors of the same kind and dropping
    /// zero powers.
    pub fn from_factors(factors: Vec<Shift>) -> Self {
        let mut out: Vec<Shift> = Vec::with_capacity(factors.len());
        for f in factors {
            match f {
                Shift::Lag(0) | Shift::Lead(0) => continue,
                _ => {}
            }
            match (out.last_mut(), f) {
                (Some(Shift::Lag(a)), Shift::Lag(b)) => *a += b,
                (Some(Shift::Lead(a)), Shift::Lead(b)) => *a += b,
                _ => out.push(f),
            }
        }
        Self(out)
    }

    pub fn factors(&self) -> &[Shift] {
        &self.0
    }

    pub fn then(&self, rhs: &ShiftWord) -> ShiftWord {
        let mut f = self.0.clone();
        f.extend_from_slice(&rhs.0);
        Self::from_factors(f)
    }

    pub fn transpose(&self) -> ShiftWord {
        Self(self.0.iter().rev().map(|s| s.transpose()).collect())
    }

    /// Row window of `W X` for any matrix `X` with `t` rows.
    pub fn window(&self, t: usize) -> RowWindow {
        self.0
            .iter()
            .rev()
            .fold(RowWindow::full(t), |w, &op| w.apply(op, t))
    }

    /// Trace of the T×T matrix this word represents.
    pub fn trace(&self, t: usize) -> f64 {
        let w = self.window(t);
        if w.offset == 0 {
            w.len() as f64
        } else {
            0.0
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = v.len();
        let w = self.window(t);
        let mut out = DVector::zeros(t);
        for s in w.lo..w.hi {
            out[s] = v[(s as isize + w.offset) as usize];
        }
        out
    }
}

/// A real linear combination of shift words, e.g. `I − Γ = I − Σ γ_ℓ D^ℓ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShiftPoly {
    terms: BTreeMap<ShiftWord, f64>,
}

impl ShiftPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::word(ShiftWord::identity())
    }

    pub fn word(w: ShiftWord) -> Self {
        Self::term(1.0, w)
    }

    pub fn term(coef: f64, w: ShiftWord) -> Self {
        let mut p = Self::zero();
        p.add_term(coef, w);
        p
    }

    pub fn lag(n: usize) -> Self {
        Self::word(ShiftWord::lag(n))
    }

    pub fn lead(n: usize) -> Self {
        Self::word(ShiftWord::lead(n))
    }

    /// Terms with an exactly zero coefficient are never stored.
    pub fn add_term(&mut self, coef: f64, w: ShiftWord) {
        if coef == 0.0 {
            return;
        }
        let e = self.terms.entry(w).or_insert(0.0);
        *e += coef;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ShiftWord, f64)> {
        self.terms.iter().map(|(w, &c)| (w, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn transpose(&self) -> ShiftPoly {
        let mut p = Self::zero();
        for (w, c) in self.terms() {
            p.add_term(c, w.transpose());
        }
        p
    }

    pub fn scale(&self, k: f64) -> ShiftPoly {
        let mut p = Self::zero();
        for (w, c) in self.terms() {
            p.add_term(k * c, w.clone());
        }
        p
    }

    pub fn trace(&self, t: usize) -> f64 {
        self.terms().map(|(w, c)| c * w.trace(t)).sum()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (w, c) in self.terms() {
            out.axpy(c, &w.apply(v), 1.0);
        }
        out
    }

    /// Largest absolute row offset among the words, for sizing caches.
    pub fn max_offset(&self, t: usize) -> usize {
        self.terms()
            .map(|(w, _)| w.window(t).offset.unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

impl Mul for &ShiftPoly {
    type Output = ShiftPoly;

    fn mul(self, rhs: &ShiftPoly) -> ShiftPoly {
        let mut p = ShiftPoly::zero();
        for (a, ca) in self.terms() {
            for (b, cb) in rhs.terms() {
                p.add_term(ca * cb, a.then(b));
            }
        }
        p
    }
}

impl Add for &ShiftPoly {
    type Output = ShiftPoly;

    fn add(self, rhs: &ShiftPoly) -> ShiftPoly {
        let mut p = self.clone();
        for (w, c) in rhs.terms() {
            p.add_term(c, w.clone());
        }
        p
    }
}

impl Sub for &ShiftPoly {
    type Output = ShiftPoly;

    fn sub(self, rhs: &ShiftPoly) -> ShiftPoly {
        self + &(-rhs)
    }
}

impl Neg for &ShiftPoly {
    type Output = ShiftPoly;

    fn neg(self) -> ShiftPoly {
        self.scale(-1.0)
    }
}
