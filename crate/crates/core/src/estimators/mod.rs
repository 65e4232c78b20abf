//! Least squares, the transformed-instrument estimator, and the solvers for
//! the bias-removing lag polynomial.

mod dataset;
mod fit;
mod solver;

pub(crate) use dataset::default_labels;
pub use dataset::Dataset;
pub use fit::{fit_solution, iv_fit, ols_fit, FitResult};
pub use solver::{
    fixed_point_map, solve, solve_gamma, solve_gamma_moments, solve_gamma_multi,
    solve_gamma_multi_moments, GammaSolution, SolverConfig,
};
