//! Command-line surface. Every subcommand reads its inputs, runs one batch
//! computation and writes a JSON or CSV artifact.
//!
//! Exit codes: `0` success, `2` bad input or data, `3` numerical failure.

mod report;
mod table;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::diagnostics::{diagnose_with, TierThresholds};
use crate::error::{Error, Result};
use crate::estimators::{fit_solution, ols_fit, solve, Dataset, SolverConfig};
use crate::inference::{contrast_se, difference_test, ContrastSpec, InferenceConfig, Regime};
use crate::preprocess::{filter_panel, FilterConfig};
use crate::simulation::{
    calibrate_from_data, feedback_alpha, run_grid, run_panel, write_grid_csv, write_panel_csv,
    GridSpec, McOptions, PanelConfig,
};

pub use report::{digest, FitSection, RunReport, VERSION};
pub use table::{write_csv, Table};

#[derive(Debug, Parser)]
#[command(
    name = "feedback-iv",
    version,
    about = "Feedback-robust regression for time series with many regressors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// OLS and bias-corrected fits with contrast inference
    Fit(FitArgs),
    /// Feedback-bias diagnostics and warning tier
    Diagnose(DiagnoseArgs),
    /// Monte Carlo over a design grid or a calibrated panel
    Simulate(SimulateArgs),
    /// Hamilton-filter every column
    Filter(FilterArgs),
    /// Emit a simulable design calibrated to data
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Moderate,
    Gaussian,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Moderate => Regime::ModerateK,
            RegimeArg::Gaussian => Regime::GaussianConservative,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub outcome: String,
    /// Lags of the fitted transformation; 0 reports OLS only
    #[arg(long, default_value_t = 1)]
    pub lags: usize,
    /// A regressor name, `feedback` (estimated feedback direction) or `all`
    #[arg(long, default_value = "all")]
    pub contrast: String,
    #[arg(long, value_enum, default_value_t = RegimeArg::Moderate)]
    pub regime: RegimeArg,
    /// Confidence level of the reported intervals
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Outcome column; defaults to the last column
    #[arg(long)]
    pub outcome: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub lmax: usize,
    #[arg(long, default_value_t = 0.05)]
    pub amber: f64,
    #[arg(long, default_value_t = 0.10)]
    pub red: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("design").required(true).args(["spec", "panel"]))]
pub struct SimulateArgs {
    /// JSON design or design grid
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// CSV panel: draw random targets and regressor subsets, calibrate, simulate
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Regressor counts for `--panel`
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub ks: Vec<usize>,
    /// Random subsets per regressor count for `--panel`
    #[arg(long, default_value_t = 1)]
    pub draws: usize,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long, default_value_t = 8)]
    pub h: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub outcome: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Filter(a) => cmd_filter(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let fail = |e: io::Error| Error::InvalidInput(format!("writing output: {e}"));
    match out {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p).map_err(fail)?);
            write(&mut f)?;
            f.flush().map_err(fail)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush().map_err(fail)
        }
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)
            .map_err(|e| Error::InvalidInput(format!("writing JSON: {e}")))?;
        w.write_all(b"\n")
            .map_err(|e| Error::InvalidInput(format!("writing output: {e}")))
    })
}

/// Splits a table into regressors and the named outcome.
fn dataset(table: &Table, outcome: &str) -> Result<Dataset> {
    let j = table.column_index(outcome)?;
    if table.headers.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least one regressor besides the outcome".into(),
        ));
    }
    let y = DVector::from(table.values.column(j));
    let keep: Vec<usize> = (0..table.headers.len()).filter(|&c| c != j).collect();
    let labels = keep.iter().map(|&c| table.headers[c].clone()).collect();
    Dataset::new(table.values.select_columns(&keep), y, labels)
}

fn contrasts(data: &Dataset, which: &str, resid: &DVector<f64>) -> Result<Vec<ContrastSpec>> {
    let k = data.k();
    if let Some(c) = data.labels().iter().position(|l| l == which) {
        return Ok(vec![ContrastSpec::coordinate(k, c, which)?]);
    }
    match which {
        "all" => data
            .labels()
            .iter()
            .enumerate()
            .map(|(c, l)| ContrastSpec::coordinate(k, c, l.clone()))
            .collect(),
        "feedback" => Ok(vec![ContrastSpec::new(
            feedback_alpha(data.x(), resid),
            "feedback",
        )
        .map_err(|_| {
            Error::InvalidInput("estimated feedback direction is zero".into())
        })?]),
        other => Err(Error::InvalidInput(format!(
            "contrast `{other}` is neither a regressor, `feedback` nor `all`"
        ))),
    }
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let start = Instant::now();
    let bytes = read(&a.data)?;
    let data = dataset(&Table::parse(&bytes)?, &a.outcome)?;
    if a.lags >= data.t() {
        return Err(Error::InvalidInput(format!(
            "--lags {} needs more than {} rows",
            a.lags,
            data.t()
        )));
    }
    let cfg = InferenceConfig::with_level(a.level)?;
    let solver = SolverConfig::default();

    let ols = ols_fit(&data)?;
    let iv = if a.lags == 0 {
        ols.clone()
    } else {
        fit_solution(&data, &solve(&data, a.lags, &solver)?)?
    };
    let resid = data.y() - data.x() * &ols.beta;
    let mut inference = Vec::new();
    let mut difference_t = Vec::new();
    for r in contrasts(&data, &a.contrast, &resid)? {
        inference.push(contrast_se(
            &data,
            &iv.gamma,
            &iv,
            &r,
            a.regime.into(),
            &cfg,
        )?);
        difference_t.push(difference_test(&data, &ols, &iv, iv.sigma2, &r)?.2);
    }
    let lmax = 4.min(data.t() - 1);
    // the solve above already warned about a large K
    let quiet = SolverConfig {
        warn_many_regressors: a.lags == 0,
        ..solver
    };
    let diagnostics = diagnose_with(&data, lmax, TierThresholds::default(), &quiet)?;

    let report = RunReport {
        command: "fit".into(),
        input_digest: digest(&bytes),
        fit: Some(FitSection {
            outcome: a.outcome.clone(),
            lags: a.lags,
            ols,
            iv,
            difference_t,
        }),
        inference,
        diagnostics: Some(diagnostics),
        timing: start.elapsed().as_secs_f64() * 1e3,
        version: VERSION.into(),
    };
    emit_json(a.out.as_deref(), &report)
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    let start = Instant::now();
    let bytes = read(&a.data)?;
    let table = Table::parse(&bytes)?;
    let outcome = match &a.outcome {
        Some(o) => o.clone(),
        None => table.headers.last().cloned().unwrap_or_default(),
    };
    let data = dataset(&table, &outcome)?;
    if !(0.0 <= a.amber && a.amber <= a.red) {
        return Err(Error::InvalidInput(
            "tier thresholds need 0 <= amber <= red".into(),
        ));
    }
    let thresholds = TierThresholds {
        amber: a.amber,
        red: a.red,
    };
    let diagnostics = diagnose_with(&data, a.lmax, thresholds, &SolverConfig::default())?;
    let report = RunReport {
        command: "diagnose".into(),
        input_digest: digest(&bytes),
        fit: None,
        inference: Vec::new(),
        diagnostics: Some(diagnostics),
        timing: start.elapsed().as_secs_f64() * 1e3,
        version: VERSION.into(),
    };
    emit_json(a.out.as_deref(), &report)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let opts = McOptions::default();
    if let Some(spec) = &a.spec {
        let text = String::from_utf8(read(spec)?)
            .map_err(|_| Error::InvalidInput("spec file is not UTF-8".into()))?;
        let grid = GridSpec::from_json(&text)?;
        let rows = run_grid(&grid, a.reps, a.seed, &opts)?;
        return emit(a.out.as_deref(), |w| write_grid_csv(&rows, w));
    }
    let path = a.panel.as_ref().expect("clap enforces --spec or --panel");
    let table = Table::parse(&read(path)?)?;
    let cfg = PanelConfig {
        ks: a.ks.clone(),
        draws: a.draws,
        n_reps: a.reps,
        seed: a.seed,
    };
    let rows = run_panel(&table.values, &table.headers, &cfg, &opts)?;
    emit(a.out.as_deref(), |w| write_panel_csv(&rows, w))
}

pub fn cmd_filter(a: &FilterArgs) -> Result<()> {
    let table = Table::parse(&read(&a.data)?)?;
    let cfg = FilterConfig { p: a.p, h: a.h };
    let filtered = filter_panel(&table.values, &table.headers, cfg)?;
    let dates = table.dates_from(a.p + a.h - 1);
    emit(a.out.as_deref(), |w| {
        write_csv(w, dates, &table.headers, &filtered)
    })
}

pub fn cmd_calibrate(a: &CalibrateArgs) -> Result<()> {
    let data = dataset(&Table::parse(&read(&a.data)?)?, &a.outcome)?;
    let spec = calibrate_from_data(data.x(), data.y())?;
    emit_json(a.out.as_deref(), &spec)
}
