use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;

use super::dgp::{calibrate_from_data, rng_for};
use super::engine::{run_monte_carlo_with, Contrast, McOptions, McSummary};
use super::grid::csv_writer;
use crate::error::{Error, Result};

/// Random-subset experiment over a panel of series: each draw picks a target
/// and `K` regressors, calibrates a fixed-base design to them, and simulates.
#[derive(Debug, Clone)]
pub struct PanelConfig {
    pub ks: Vec<usize>,
    pub draws: usize,
    pub n_reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub k: usize,
    pub draw: usize,
    pub t: usize,
    pub target: String,
    pub summary: McSummary,
}

// draw streams live far from replication streams
const DRAW_STREAM: u64 = 1 << 48;

pub fn run_panel(
    panel: &DMatrix<f64>,
    labels: &[String],
    cfg: &PanelConfig,
    opts: &McOptions,
) -> Result<Vec<PanelRow>> {
    let (t, n) = panel.shape();
    if labels.len() != n {
        return Err(Error::InvalidInput("one label per panel column".into()));
    }
    let mut rows = Vec::new();
    for &k in &cfg.ks {
        if k == 0 || k + 1 > n || k >= t {
            return Err(Error::InvalidInput(format!(
                "cannot draw {k} regressors plus a target from {n} series of length {t}"
            )));
        }
        for d in 0..cfg.draws {
            let mut rng = rng_for(cfg.seed, DRAW_STREAM + ((k as u64) << 20) + d as u64);
            let picked = sample(&mut rng, n, k + 1).into_vec();
            let (target, regs) = (picked[0], &picked[1..]);
            let x = panel.select_columns(regs);
            let y = DVector::from(panel.column(target));
            let spec = calibrate_from_data(&x, &y)?;
            let summary = run_monte_carlo_with(
                &spec,
                cfg.n_reps,
                Contrast::FeedbackDirection,
                cfg.seed,
                opts,
            )?;
            rows.push(PanelRow {
                k,
                draw: d,
                t,
                target: labels[target].clone(),
                summary,
            });
        }
    }
    Ok(rows)
}

pub const PANEL_HEADER: [&str; 12] = [
    "K",
    "draw",
    "T",
    "target",
    "estimator",
    "bias",
    "sd",
    "size",
    "lower_trace_ratio",
    "n_reps",
    "failures",
    "seed",
];

pub fn write_panel_csv<W: Write>(rows: &[PanelRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
    w.write_record(PANEL_HEADER).map_err(io)?;
    for row in rows {
        let s = &row.summary;
        for (name, est) in [("ols", &s.ols), ("iv", &s.iv)] {
            w.write_record([
                row.k.to_string(),
                row.draw.to_string(),
                row.t.to_string(),
                row.target.clone(),
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
