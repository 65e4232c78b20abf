//! Hamilton-filter detrending and column standardization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::column_basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Autoregressive lags.
    pub p: usize,
    /// Forecast horizon.
    pub h: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { p: 4, h: 8 }
    }
}

/// Residuals of regressing `s_{t+h}` on `(1, s_t, …, s_{t−p+1})`.
///
/// The output has `T − h − p + 1` entries; entry `j` belongs to original
/// (0-based) index `j + p + h − 1`. A design that is rank deficient but not
/// constant, such as an exact trend, is projected on its column space.
pub fn hamilton_filter(series: &[f64], cfg: FilterConfig) -> Result<DVector<f64>> {
    let FilterConfig { p, h } = cfg;
    let t = series.len();
    if p == 0 || h == 0 {
        return Err(Error::InvalidInput("filter needs p >= 1 and h >= 1".into()));
    }
    if t <= p + h + 1 {
        return Err(Error::InvalidInput(format!(
            "series of length {t} is too short for p = {p}, h = {h}"
        )));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "missing or non-finite value at row {}",
            i + 1
        )));
    }
    let n = t - h - p + 1;
    let z = DMatrix::from_fn(n, p + 1, |j, c| {
        if c == 0 {
            1.0
        } else {
            series[j + p - 1 - (c - 1)]
        }
    });
    let target = DVector::from_fn(n, |j, _| series[j + p - 1 + h]);
    let basis = column_basis(&z);
    if basis.ncols() <= 1 {
        return Err(Error::DegenerateSeries(
            "lag matrix is collinear with the intercept (constant series)".into(),
        ));
    }
    let fitted = &basis * basis.tr_mul(&target);
    Ok(target - fitted)
}

/// Filters each column and stacks the results. All columns share a length,
/// so the common sample is the whole output.
pub fn filter_panel(
    x: &DMatrix<f64>,
    labels: &[String],
    cfg: FilterConfig,
) -> Result<DMatrix<f64>> {
    let cols = x
        .column_iter()
        .zip(labels)
        .map(|(c, name)| {
            hamilton_filter(c.as_slice(), cfg).map_err(|e| match e {
                Error::DegenerateSeries(m) => {
                    Error::DegenerateSeries(format!("column `{name}`: {m}"))
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Demeans each column and scales it to unit sample variance (`n − 1`).
pub fn standardize(x: &DMatrix<f64>, labels: &[String]) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need at least two rows to standardize".into(),
        ));
    }
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n - 1) as f64).sqrt();
        let scale = col.amax().max(mean.abs());
        if !(sd > 1e-12 * scale) {
            let name = labels
                .get(j)
                .cloned()
                .unwrap_or_else(|| format!("column {}", j + 1));
            return Err(Error::ConstantColumn(name));
        }
        col /= sd;
    }
    Ok(out)
}
