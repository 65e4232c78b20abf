use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular design: numerical rank {rank} < {columns} columns")]
    SingularDesign { rank: usize, columns: usize },

    #[error("near-singular transform: condition estimate {condition:e} exceeds {threshold:e}")]
    NearSingularTransform { condition: f64, threshold: f64 },

    #[error(
        "solver did not converge after {iterations} iterations \
         (last iterate {last:?}, residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        last: Vec<f64>,
        residual: f64,
    },

    #[error("degenerate contrast: standard error is zero")]
    DegenerateContrast,

    #[error("zero residual: outcome is an exact linear function of the regressors")]
    ZeroResidual,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("constant column `{0}` cannot be standardized")]
    ConstantColumn(String),

    #[error("{failures} of {n_reps} replications failed (limit is 1%)")]
    TooManyFailures { failures: usize, n_reps: usize },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NearSingularTransform { .. }
                | Error::NoConvergence { .. }
                | Error::TooManyFailures { .. }
        )
    }
}
