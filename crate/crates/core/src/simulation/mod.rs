//! Data-generating processes, calibration to observed data, and the
//! replication engine behind the Monte Carlo experiments.

mod dgp;
mod engine;
mod grid;
mod panel;

pub use dgp::{
    calibrate_from_data, draw_sample, feedback_alpha, gen_base_regressors, gen_sample, rng_for,
    DgpSpec, Gaussian, Innovations, Process, Sample, StudentT,
};
pub use engine::{
    run_monte_carlo, run_monte_carlo_with, run_replications, summarize, threads_from_env,
    with_pool, Contrast, EstimatorSummary, McOptions, McSummary, OracleOutcome, RepOutcome,
    THREADS_ENV,
};
pub use grid::{run_grid, write_grid_csv, GridRow, GridSpec, OneOrMany, GRID_HEADER};
pub use panel::{run_panel, write_panel_csv, PanelConfig, PanelRow, PANEL_HEADER};
