//! Sparse recovery on a composed sensing matrix `Φ = A D`: thresholding,
//! orthogonal matching pursuit and basis pursuit.
//!
//! Correlations use raw inner products `⟨s, ψ_j⟩` with no column
//! renormalization, and argmax ties go to the lowest index.

mod bp;
mod greedy;

use thiserror::Error;

use crate::numerics::{least_squares, norm2, DenseMatrix, NumericsError};

pub use bp::{basis_pursuit_recover, BpOptions};
pub use greedy::{omp_recover, thresholding_recover, StopRule, STALL_TOLERANCE};

/// Error constant for noisy basis pursuit when `δ_{4S} ≤ 1/3`.
pub const BP_ERROR_CONSTANT: f64 = 15.41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Thresholding,
    Omp,
    BasisPursuit,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Thresholding, Algorithm::Omp, Algorithm::BasisPursuit];

    pub fn name(self) -> &'static str {
        match self {
            Self::Thresholding => "thresholding",
            Self::Omp => "omp",
            Self::BasisPursuit => "bp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "thresholding" | "thresh" => Some(Self::Thresholding),
            "omp" => Some(Self::Omp),
            "bp" | "basis-pursuit" | "basis_pursuit" => Some(Self::BasisPursuit),
            _ => None,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub estimate: Vec<f64>,
    pub support: Vec<usize>,
    pub residual_l2: f64,
    pub iterations: usize,
    pub algorithm: Algorithm,
    pub converged: bool,
}

impl RecoveryResult {
    pub(crate) fn new(
        phi: &DenseMatrix,
        s: &[f64],
        estimate: Vec<f64>,
        support: Vec<usize>,
        iterations: usize,
        algorithm: Algorithm,
        converged: bool,
    ) -> Self {
        let residual_l2 = residual_norm(phi, s, &estimate);
        Self {
            estimate,
            support,
            residual_l2,
            iterations,
            algorithm,
            converged,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("least-squares system is rank deficient (min/max |R_jj| = {rank_ratio:e})")]
    RankDeficient {
        rank_ratio: f64,
        partial: Box<RecoveryResult>,
    },
    #[error("residual stopped decreasing at iteration {iteration}")]
    Stalled {
        iteration: usize,
        partial: Box<RecoveryResult>,
    },
    #[error("measurement is not in the range of the sensing matrix (distance {distance:e})")]
    Infeasible { distance: f64 },
    #[error("no convergence within {iterations} iterations")]
    MaxIterationsExceeded {
        iterations: usize,
        best: Box<RecoveryResult>,
    },
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

impl RecoveryError {
    /// The partial or best iterate carried by the error, if any.
    pub fn partial(&self) -> Option<&RecoveryResult> {
        match self {
            Self::RankDeficient { partial, .. } | Self::Stalled { partial, .. } => Some(partial),
            Self::MaxIterationsExceeded { best, .. } => Some(best),
            _ => None,
        }
    }
}

/// `x` with nonzero coefficients on a sorted support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    k: usize,
    support: Vec<usize>,
    coefficients: Vec<f64>,
}

impl SparseSignal {
    pub fn new(k: usize, support: Vec<usize>, coefficients: Vec<f64>) -> Result<Self, RecoveryError> {
        if support.len() != coefficients.len() {
            return Err(RecoveryError::DimensionMismatch {
                expected: support.len(),
                found: coefficients.len(),
            });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RecoveryError::InvalidInput("support must be strictly increasing".into()));
        }
        if let Some(&i) = support.last() {
            if i >= k {
                return Err(RecoveryError::InvalidInput(format!("support index {i} out of range for K = {k}")));
            }
        }
        if coefficients.iter().any(|c| !(c.abs() > 0.0) || !c.is_finite()) {
            return Err(RecoveryError::InvalidInput("coefficients must be finite and nonzero".into()));
        }
        Ok(Self { k, support, coefficients })
    }

    /// Nonzero entries of a dense vector.
    pub fn from_dense(x: &[f64]) -> Result<Self, RecoveryError> {
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let coefficients = support.iter().map(|&i| x[i]).collect();
        Self::new(x.len(), support, coefficients)
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.k];
        for (&i, &c) in self.support.iter().zip(&self.coefficients) {
            x[i] = c;
        }
        x
    }
}

pub(crate) fn residual_norm(phi: &DenseMatrix, s: &[f64], x: &[f64]) -> f64 {
    let fit = phi.mul_vec(x);
    norm2(&crate::numerics::sub(s, &fit))
}

pub(crate) fn check_system(phi: &DenseMatrix, s: &[f64]) -> Result<(), RecoveryError> {
    if phi.rows() == 0 || phi.cols() == 0 {
        return Err(RecoveryError::InvalidInput("sensing matrix must be non-empty".into()));
    }
    if s.len() != phi.rows() {
        return Err(RecoveryError::DimensionMismatch {
            expected: phi.rows(),
            found: s.len(),
        });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(RecoveryError::InvalidInput("measurement has non-finite entries".into()));
    }
    Ok(())
}

/// Outcome of a least-squares fit on a support that failed for rank reasons.
pub(crate) enum RefitError {
    Rank(f64),
    Other(RecoveryError),
}

pub(crate) fn refit(phi: &DenseMatrix, s: &[f64], support: &[usize]) -> Result<Vec<f64>, RefitError> {
    let mut x = vec![0.0; phi.cols()];
    if support.is_empty() {
        return Ok(x);
    }
    let sub = phi.select_columns(support);
    match least_squares(&sub, s) {
        Ok(coef) => {
            for (&i, c) in support.iter().zip(coef) {
                x[i] = c;
            }
            Ok(x)
        }
        Err(NumericsError::RankDeficient { rank_ratio }) => Err(RefitError::Rank(rank_ratio)),
        // More atoms than rows cannot have full column rank.
        Err(NumericsError::ShapeMismatch { .. }) if support.len() > phi.rows() => Err(RefitError::Rank(0.0)),
        Err(e) => Err(RefitError::Other(RecoveryError::InvalidInput(e.to_string()))),
    }
}

/// `Φ_Λ† s` embedded in a length-`K` vector, zero off `Λ`.
pub fn refit_on_support(phi: &DenseMatrix, s: &[f64], support: &[usize]) -> Result<Vec<f64>, RecoveryError> {
    check_system(phi, s)?;
    if let Some(&index) = support.iter().find(|&&i| i >= phi.cols()) {
        return Err(RecoveryError::InvalidInput(format!("support index {index} out of range")));
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(RecoveryError::InvalidInput("support has repeated indices".into()));
    }
    refit(phi, s, support).map_err(|e| match e {
        RefitError::Rank(rank_ratio) => {
            let zeros = vec![0.0; phi.cols()];
            RecoveryError::RankDeficient {
                rank_ratio,
                partial: Box::new(RecoveryResult::new(
                    phi,
                    s,
                    zeros,
                    sorted.clone(),
                    0,
                    Algorithm::Thresholding,
                    false,
                )),
            }
        }
        RefitError::Other(e) => e,
    })
}

/// True iff the recovered support equals the true support as a set.
pub fn support_recovered(result: &RecoveryResult, truth: &SparseSignal) -> Result<bool, RecoveryError> {
    if result.estimate.len() != truth.len() {
        return Err(RecoveryError::DimensionMismatch {
            expected: truth.len(),
            found: result.estimate.len(),
        });
    }
    let mut got = result.support.clone();
    got.sort_unstable();
    got.dedup();
    Ok(got == truth.support)
}

/// `15.41 η`, the noisy basis pursuit error bound, valid when `δ_{4S} ≤ 1/3`.
pub fn bp_error_bound(delta4s: f64, eta: f64) -> Result<f64, RecoveryError> {
    if !(eta >= 0.0) {
        return Err(RecoveryError::InvalidInput(format!("eta = {eta} must be non-negative")));
    }
    if !(delta4s >= 0.0) {
        return Err(RecoveryError::InvalidInput(format!("delta = {delta4s} must be non-negative")));
    }
    if delta4s > 1.0 / 3.0 {
        return Err(RecoveryError::NotApplicable(format!(
            "the error constant is only established for delta_4S <= 1/3, got {delta4s}"
        )));
    }
    Ok(BP_ERROR_CONSTANT * eta)
}
