//! Exceptional points by characteristic-polynomial coefficient matching.
//!
//! An order-`N` exceptional point of the array matrix `M` is a parameter set
//! with `det(M - xI) = (gamma - x)^N` and a one-dimensional kernel of
//! `M - gamma I`. PT symmetry makes every coefficient real and the trace fixes
//! `gamma`, leaving `N - 1` real equations in `N - 1` real unknowns. These are
//! solved by damped Newton from many random starts; converged points are
//! merged into families and certified by a numerical rank test.

mod problem;
mod seeds;
mod solver;
mod verify;

pub use problem::{coefficient_mismatch, residual, EpProblem, Mode, Residual};
pub use seeds::{
    analytic_seed, classify_gain_loss, extend_family, extend_seed, trimer_first_order_c, ProfileClass,
    EXTENSION_SCALES, QUADRIMER_FAMILIES,
};
pub use solver::{
    canonicalize, enumerate_families, merge_families, multistart_points, newton_solve, refine_full,
    refine_full_continued, EpSolution, NonConvergence, SolverConfig, ACCEPT_RESIDUAL,
};
pub use verify::{verify_solution, Check, VerificationReport};

use crate::capacitance::CapacitanceError;
use crate::linalg::LinalgError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EpError {
    #[error("order must be ≥ 2 (got {0})")]
    InvalidOrder(usize),
    #[error("epsilon = {0} outside [0, 1)")]
    InvalidEpsilon(f64),
    #[error("expected {expected} unknowns, found {found}")]
    UnknownLength { expected: usize, found: usize },
    #[error("unknowns must be finite")]
    NonFiniteUnknowns,
    #[error("no analytic seed for order {0}")]
    UnsupportedOrder(usize),
    #[error("operation requires a leading-mode solution, got {0} mode")]
    WrongMode(Mode),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("Newton iteration did not converge ({}) after {} iterations, residual {:.3e}", .0.reason, .0.iterations, .0.residual_norm)]
    NonConvergence(Box<NonConvergence>),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Capacitance(#[from] CapacitanceError),
}
