//! Dense linear-algebra kernels and seeded random streams.

mod linalg;
mod matrix;
mod rng;

use thiserror::Error;

pub use linalg::{
    least_squares, sym_eig, sym_eig_extremes, Cholesky, HouseholderQr, SymmetricEigen, RANK_TOLERANCE,
    SYMMETRY_TOLERANCE,
};
pub use matrix::{dot, norm2, DenseMatrix};
pub use rng::{gaussian_sample, rademacher_sample, RngStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("rank deficient: min/max |R_jj| = {rank_ratio:e}")]
    RankDeficient { rank_ratio: f64 },
    #[error("matrix not symmetric at ({row}, {col}): |g_ij - g_ji| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("matrix not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
