//! Independent checks: brute-force minima, local-minimum refutation,
//! interpolation solvers and the perturbable-gradient-basis bound.

mod checks;
mod grid;
mod interp;
mod local;
mod pgb;
mod verdict;

pub use checks::{central_difference, gradient_check, stationary_a_check, GRAD_ATOL, GRAD_RTOL};
pub use grid::{grid_global_min, grid_global_min_refined, GridMin, GRID_BUDGET, TIE_TOL};
pub use interp::{exp_interp, poly_interp, ExpDirection, ExpInterp, PolyInterp, FEATURE_BUDGET, RANK_RTOL};
pub use local::{
    gradient_factorization, per_sample_gradient_check, sample_ball, verify_local_min, write_matrix_csv, Factorization,
    LOCAL_MIN_SLACK,
};
pub use pgb::{pgb_check, PerturbationSet, PgbConfig, PGB_MAX_AMPLITUDE};
pub use verdict::{OracleVerdict, Residual};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("budget exceeded: {requested} requested, limit {limit}")]
    Budget { requested: u128, limit: u128 },
    #[error("invalid oracle input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
