use std::io::Write;

use serde::Deserialize;

use super::dgp::{DgpSpec, Process};
use super::engine::{run_monte_carlo_with, Contrast, McOptions, McSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_rho() -> OneOrMany<f64> {
    OneOrMany::One(0.0)
}

fn default_sigma2() -> f64 {
    1.0
}

/// A sweep over `T × K × rho`. A plain [`DgpSpec`] JSON parses as a
/// one-point grid. Feedback vectors and `beta` shorter than `K` are padded
/// with zeros.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "T")]
    pub t: OneOrMany<usize>,
    #[serde(rename = "K")]
    pub k: OneOrMany<usize>,
    pub process: Process,
    #[serde(default = "default_rho")]
    pub rho: OneOrMany<f64>,
    #[serde(default)]
    pub base: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub alphas: Vec<Vec<f64>>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default)]
    pub contrast: Contrast,
    /// Lags of the fitted `Γ`; defaults to the number of feedback vectors.
    #[serde(default)]
    pub lags: Option<usize>,
}

fn pad(v: &[f64], k: usize, what: &str) -> Result<Vec<f64>> {
    if v.len() > k {
        return Err(Error::InvalidInput(format!(
            "{what} has {} entries but K = {k}",
            v.len()
        )));
    }
    let mut out = v.to_vec();
    out.resize(k, 0.0);
    Ok(out)
}

impl GridSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("spec file: {e}")))
    }

    /// Every design in the sweep, validated.
    pub fn points(&self) -> Result<Vec<DgpSpec>> {
        let mut out = Vec::new();
        for &t in &self.t.values() {
            for &k in &self.k.values() {
                for &rho in &self.rho.values() {
                    let alphas = self
                        .alphas
                        .iter()
                        .map(|a| pad(a, k, "alpha"))
                        .collect::<Result<Vec<_>>>()?;
                    let spec = DgpSpec {
                        t,
                        k,
                        process: self.process,
                        rho,
                        base: self.base.clone(),
                        alphas,
                        beta: pad(&self.beta, k, "beta")?,
                        sigma2: self.sigma2,
                    };
                    spec.validate()?;
                    out.push(spec);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("the grid is empty".into()));
        }
        Ok(out)
    }
}

/// One design's Monte Carlo summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub spec: DgpSpec,
    pub summary: McSummary,
}

pub fn run_grid(
    grid: &GridSpec,
    n_reps: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<GridRow>> {
    let mut opts = opts.clone();
    if opts.lags.is_none() {
        opts.lags = grid.lags;
    }
    grid.points()?
        .into_iter()
        .map(|spec| {
            let summary = run_monte_carlo_with(&spec, n_reps, grid.contrast, seed, &opts)?;
            Ok(GridRow { spec, summary })
        })
        .collect()
}

pub const GRID_HEADER: [&str; 11] = [
    "K",
    "rho",
    "T",
    "estimator",
    "bias",
    "sd",
    "size",
    "lower_trace_ratio",
    "n_reps",
    "failures",
    "seed",
];

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Two lines per design, OLS then IV. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
    w.write_record(GRID_HEADER).map_err(io)?;
    for row in rows {
        let s = &row.summary;
        for (name, est) in [("ols", &s.ols), ("iv", &s.iv)] {
            w.write_record([
                row.spec.k.to_string(),
                row.spec.rho.to_string(),
                row.spec.t.to_string(),
                name.to_string(),
                est.bias.to_string(),
                est.sd.to_string(),
                est.size.to_string(),
                s.lower_trace_ratio.to_string(),
                s.n_reps.to_string(),
                s.failures.to_string(),
                s.seed.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("writing CSV: {e}")))?;
    Ok(())
}
