//! Reference implementations that build every T×T operator explicitly.
//! Slow and simple on purpose; only used to check the fast paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `D^n` with `D[t, t-1] = 1`.
pub fn lag_matrix(t: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |i, j| if i >= n && j == i - n { 1.0 } else { 0.0 })
}

pub fn lead_matrix(t: usize, n: usize) -> DMatrix<f64> {
    lag_matrix(t, n).transpose()
}

pub fn gamma_matrix(t: usize, gammas: &[f64]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(t, t);
    for (l, c) in gammas.iter().enumerate() {
        g += lag_matrix(t, l + 1) * *c;
    }
    g
}

/// `I − Γ`.
pub fn transform_matrix(t: usize, gammas: &[f64]) -> DMatrix<f64> {
    DMatrix::identity(t, t) - gamma_matrix(t, gammas)
}

pub fn inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().try_inverse().expect("invertible")
}

/// `I − X(X'X)^{-1}X'`.
pub fn annihilator(x: &DMatrix<f64>) -> DMatrix<f64> {
    let t = x.nrows();
    DMatrix::identity(t, t) - x * inverse(&x.tr_mul(x)) * x.transpose()
}

/// `M_Γ = I − X(X'RX)^{-1}X'R`.
pub fn oblique(x: &DMatrix<f64>, gammas: &[f64]) -> DMatrix<f64> {
    let t = x.nrows();
    let r = transform_matrix(t, gammas);
    DMatrix::identity(t, t) - x * inverse(&(x.transpose() * &r * x)) * x.transpose() * r
}

/// `tr[(D')^ℓ (I−Γ) M_Γ]` for `ℓ = 1..=L`.
pub fn trace_equation(x: &DMatrix<f64>, gammas: &[f64]) -> Vec<f64> {
    let t = x.nrows();
    let rm = transform_matrix(t, gammas) * oblique(x, gammas);
    (1..=gammas.len())
        .map(|l| (lead_matrix(t, l) * &rm).trace())
        .collect()
}

pub fn effective_dof(x: &DMatrix<f64>, gammas: &[f64]) -> f64 {
    (transform_matrix(x.nrows(), gammas) * oblique(x, gammas)).trace()
}

/// `tr(D' M_Γ) / (T − K)` with `Γ = γD`.
pub fn fixed_point_map(x: &DMatrix<f64>, gamma: f64) -> f64 {
    let (t, k) = x.shape();
    (lead_matrix(t, 1) * oblique(x, &[gamma])).trace() / (t - k) as f64
}

/// Bisection on a bracketing interval; stops when the bracket is below `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "interval does not bracket a root");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Traces `(tr B², tr B'B)` for `B = D'(I−Γ)M_Γ`.
pub fn psi_traces(x: &DMatrix<f64>, gammas: &[f64]) -> (f64, f64) {
    let t = x.nrows();
    let b = lead_matrix(t, 1) * transform_matrix(t, gammas) * oblique(x, gammas);
    ((&b * &b).trace(), (b.transpose() * &b).trace())
}

/// `(X'RX)^{-1} X'R y`.
pub fn iv_beta(x: &DMatrix<f64>, y: &DVector<f64>, gammas: &[f64]) -> DVector<f64> {
    let r = transform_matrix(x.nrows(), gammas);
    inverse(&(x.transpose() * &r * x)) * x.transpose() * r * y
}

/// `y'(I−Γ)M_Γ y / tr[(I−Γ)M_Γ]`.
pub fn iv_sigma2(x: &DMatrix<f64>, y: &DVector<f64>, gammas: &[f64]) -> f64 {
    let rm = transform_matrix(x.nrows(), gammas) * oblique(x, gammas);
    (y.transpose() * &rm * y)[0] / rm.trace()
}

/// `((I−Γ)'X (X'(I−Γ)X)^{-T} r)`, the weight vector of `r'β̂`.
pub fn contrast_weights(x: &DMatrix<f64>, gammas: &[f64], r: &DVector<f64>) -> DVector<f64> {
    let rt = transform_matrix(x.nrows(), gammas);
    (r.transpose() * inverse(&(x.transpose() * &rt * x)) * x.transpose() * rt).transpose()
}

/// Weights of `r'(β̂_OLS − β̂_IV)`.
pub fn difference_weights(x: &DMatrix<f64>, gammas: &[f64], r: &DVector<f64>) -> DVector<f64> {
    contrast_weights(x, &[], r) - contrast_weights(x, gammas, r)
}

/// `S̄_Γ` for the leading-order bias. With one lag the feedback block uses
/// `tr[(I−Γ)M̃_Γ]`; with more it uses `tr[(D')^j (I−Γ) M̃_Γ D^ℓ]`.
pub fn bias_matrix(
    xt: &DMatrix<f64>,
    alphas: &[DVector<f64>],
    sigma2: f64,
    gammas: &[f64],
) -> DMatrix<f64> {
    let t = xt.nrows();
    let r = transform_matrix(t, gammas);
    let rm = &r * oblique(xt, gammas);
    let mut s = xt.transpose() * &r * xt;
    if alphas.len() == 1 {
        s += &alphas[0] * alphas[0].transpose() * (sigma2 * rm.trace());
    } else {
        for (j, aj) in alphas.iter().enumerate() {
            for (l, al) in alphas.iter().enumerate() {
                let tr = (lead_matrix(t, j + 1) * &rm * lag_matrix(t, l + 1)).trace();
                s += aj * al.transpose() * (sigma2 * tr);
            }
        }
    }
    s
}

/// `σ² Σ_ℓ r'S̄_Γ^{-1}α_ℓ tr[(D')^ℓ (I−Γ) M̃_Γ]`.
pub fn bias(
    xt: &DMatrix<f64>,
    alphas: &[DVector<f64>],
    sigma2: f64,
    gammas: &[f64],
    r: &DVector<f64>,
) -> f64 {
    let t = xt.nrows();
    let g: Vec<f64> = if gammas.is_empty() {
        vec![0.0; alphas.len()]
    } else {
        gammas.to_vec()
    };
    let rm = transform_matrix(t, &g) * oblique(xt, &g);
    let sinv = inverse(&bias_matrix(xt, alphas, sigma2, &g));
    alphas
        .iter()
        .enumerate()
        .map(|(l, a)| {
            sigma2 * (r.transpose() * &sinv * a)[0] * (lead_matrix(t, l + 1) * &rm).trace()
        })
        .sum()
}

/// Predicted `σ̂²(Γ)/σ²` with one feedback lag.
pub fn variance_ratio(xt: &DMatrix<f64>, alpha: &DVector<f64>, sigma2: f64, gamma: f64) -> f64 {
    let t = xt.nrows();
    let rm = transform_matrix(t, &[gamma]) * oblique(xt, &[gamma]);
    let sinv = inverse(&bias_matrix(
        xt,
        std::slice::from_ref(alpha),
        sigma2,
        &[gamma],
    ));
    let lead = (lead_matrix(t, 1) * &rm).trace();
    let lag = (lag_matrix(t, 1) * &rm).trace();
    1.0 - sigma2 * (alpha.transpose() * sinv * alpha)[0] * lead * lag / rm.trace()
}

/// Gaussian T×K matrix from a fixed seed.
pub fn random_design(t: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(t, k, |_, _| StandardNormal.sample(&mut rng))
}

/// Columns are AR(1) with coefficient `rho`, started at zero.
pub fn ar1_design(t: usize, k: usize, rho: f64, seed: u64) -> DMatrix<f64> {
    let e = random_design(t, k, seed);
    let mut x = e.clone();
    for i in 1..t {
        for j in 0..k {
            x[(i, j)] = rho * x[(i - 1, j)] + e[(i, j)];
        }
    }
    x
}

pub fn random_vector(n: usize, seed: u64) -> DVector<f64> {
    random_design(n, 1, seed).column(0).into_owned()
}
