//! Dense complex linear algebra for small matrices.
//!
//! Eigenvalues are computed as roots of the characteristic polynomial
//! (Faddeev–LeVerrier followed by Aberth–Ehrlich iteration). At the sizes
//! this crate deals with (a few dozen rows at most) that is cheap, and the
//! exceptional-point search needs the polynomial coefficients anyway.

mod matrix;
mod poly;
mod rank;
mod roots;

pub use matrix::ComplexMatrix;
pub use poly::{char_poly, Polynomial};
pub use rank::{kernel_dimension, solve_real, DEFAULT_RANK_TOLERANCE};
pub use roots::{eigenvalues, poly_roots, RootCluster, Spectrum, CLUSTER_SAFETY, MAX_ROOT_ITERATIONS};

pub type C64 = num_complex::Complex<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("shape mismatch: expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite entry")]
    NonFinite,
    #[error("zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("constant polynomial has no roots")]
    ConstantPolynomial,
    #[error("rank tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("linear system is numerically singular")]
    Singular,
}
