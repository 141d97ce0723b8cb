//! Polynomial and Laurent-series algebra over exact rationals or complex
//! doubles: residues, root clustering and multiplication in `C[z]/(q)`.

pub mod laurent;
pub mod mpoly;
pub mod poly;
pub mod residue;
pub mod roots;
pub mod scalar;

pub use laurent::{laurent_power, LaurentSeries};
pub use mpoly::MPoly;
pub use poly::{qpoly, Polynomial};
pub use residue::{finite_residue_sum, residue_at_infinity, residue_at_point, residue_at_point_tol};
pub use roots::{roots, roots_clustered, RootCluster, DEFAULT_CLUSTER_TOL};
pub use scalar::{binom_q, q, q_from_f64, q_to_f64, qi, Ring, Scalar, C, Q};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("denominator does not vanish to order {mult} at the pole ({detail})")]
    DegeneratePole { mult: usize, detail: String },
    #[error("rational function does not decay at infinity (num degree {num_deg:?}, den degree {den_deg:?})")]
    NonDecaying { num_deg: Option<usize>, den_deg: Option<usize> },
    #[error("root finding did not converge: {0}")]
    NoConvergence(String),
    #[error("zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("undefined branch: {0}")]
    UndefinedBranch(String),
    #[error("series window too small: need degree {needed}, reliable only down to {available}")]
    WindowTooSmall { needed: i64, available: i64 },
}

/// `(f g) mod modulus`.
pub fn quotient_multiply<S: Scalar>(f: &Polynomial<S>, g: &Polynomial<S>, modulus: &Polynomial<S>) -> Polynomial<S> {
    (f * g).rem(modulus)
}
