use rayon::prelude::*;

use super::DictionaryError;
use crate::numerics::{sym_eig_extremes, DenseMatrix, RngStream};

/// Largest number of supports `restricted_isometry_exact` enumerates by default.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsometryMethod {
    /// Every support of the given size was evaluated; `delta` is exact.
    ExactEnumeration,
    /// Maximum over random supports; a lower bound on the true constant.
    MonteCarlo,
    /// Babel-function estimate; an upper bound on the true constant.
    CoherenceBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryReport {
    pub sparsity: usize,
    pub delta: f64,
    pub method: IsometryMethod,
    pub supports_evaluated: u128,
    pub confidence_note: String,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

fn check_support(m: &DenseMatrix, support: &[usize]) -> Result<(), DictionaryError> {
    if support.is_empty() {
        return Err(DictionaryError::EmptySupport);
    }
    if let Some(&index) = support.iter().find(|&&i| i >= m.cols()) {
        return Err(DictionaryError::InvalidSupport { index, cols: m.cols() });
    }
    Ok(())
}

fn delta_from_gram(g: &DenseMatrix) -> Result<f64, DictionaryError> {
    let (lo, hi) = sym_eig_extremes(g)?;
    Ok(f64::max(1.0 - lo, hi - 1.0).max(0.0))
}

/// Local isometry constant `δ_Λ = max(1 − λ_min, λ_max − 1)` of the Gram
/// matrix of the columns of `m` indexed by `support`.
pub fn local_isometry(m: &DenseMatrix, support: &[usize]) -> Result<f64, DictionaryError> {
    check_support(m, support)?;
    delta_from_gram(&m.column_gram(support))
}

fn sub_gram(full: &DenseMatrix, support: &[usize]) -> DenseMatrix {
    let s = support.len();
    DenseMatrix::from_fn(s, s, |a, b| full.get(support[a], support[b]))
}

fn check_sparsity(m: &DenseMatrix, sparsity: usize) -> Result<(), DictionaryError> {
    if sparsity == 0 || sparsity > m.cols() {
        return Err(DictionaryError::OutOfRange(format!(
            "sparsity {sparsity} must be in 1..={}",
            m.cols()
        )));
    }
    Ok(())
}

/// `δ_S` by enumerating all `C(K, S)` supports.
pub fn restricted_isometry_exact(
    m: &DenseMatrix,
    sparsity: usize,
    enumeration_limit: u128,
) -> Result<IsometryReport, DictionaryError> {
    check_sparsity(m, sparsity)?;
    let k = m.cols();
    let count = binomial(k, sparsity);
    if count > enumeration_limit {
        return Err(DictionaryError::CombinatorialBlowup {
            count,
            limit: enumeration_limit,
        });
    }
    let full = m.gram();
    // Split the enumeration on the smallest index; each branch walks the
    // remaining indices lexicographically. The max reduction is order-free.
    let delta = (0..=(k - sparsity))
        .into_par_iter()
        .map(|first| -> Result<f64, DictionaryError> {
            let mut support: Vec<usize> = (first..first + sparsity).collect();
            let mut best = 0.0f64;
            loop {
                best = best.max(delta_from_gram(&sub_gram(&full, &support))?);
                if !next_tail(&mut support, k) {
                    return Ok(best);
                }
            }
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(IsometryReport {
        sparsity,
        delta,
        method: IsometryMethod::ExactEnumeration,
        supports_evaluated: count,
        confidence_note: format!("exact maximum over all {count} supports"),
    })
}

/// Advances `support[1..]` to the next combination of indices above
/// `support[0]`, keeping `support[0]` fixed. Returns false when exhausted.
fn next_tail(support: &mut [usize], k: usize) -> bool {
    let s = support.len();
    let mut i = s;
    while i > 1 {
        i -= 1;
        if support[i] < k - (s - i) {
            support[i] += 1;
            for j in (i + 1)..s {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Lower bound on `δ_S`: the maximum of `δ_Λ` over `samples` uniformly drawn supports.
pub fn restricted_isometry_sampled(
    m: &DenseMatrix,
    sparsity: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<IsometryReport, DictionaryError> {
    check_sparsity(m, sparsity)?;
    if samples == 0 {
        return Err(DictionaryError::OutOfRange("samples must be at least 1".into()));
    }
    let supports: Vec<Vec<usize>> = (0..samples).map(|_| rng.subset(m.cols(), sparsity)).collect();
    let delta = supports
        .par_iter()
        .map(|support| local_isometry(m, support))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(IsometryReport {
        sparsity,
        delta,
        method: IsometryMethod::MonteCarlo,
        supports_evaluated: samples as u128,
        confidence_note: format!(
            "lower bound: maximum over {samples} random supports of {}",
            binomial(m.cols(), sparsity)
        ),
    })
}
