use super::{check_system, refit, Algorithm, RecoveryError, RecoveryResult, RefitError};
use crate::numerics::{norm2, DenseMatrix};

/// Minimum decrease of the residual norm per OMP iteration, relative to `‖s‖`.
pub const STALL_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Select exactly this many atoms (fewer only if the fit becomes exact).
    MaxAtoms(usize),
    /// Stop once `‖r‖₂ ≤ ρ`, selecting at most `min(n, K)` atoms.
    ResidualTol(f64),
}

fn sorted(support: &[usize]) -> Vec<usize> {
    let mut v = support.to_vec();
    v.sort_unstable();
    v
}

fn check_sparsity(phi: &DenseMatrix, sparsity: usize) -> Result<(), RecoveryError> {
    let cap = phi.rows().min(phi.cols());
    if sparsity == 0 || sparsity > cap {
        return Err(RecoveryError::InvalidInput(format!("sparsity {sparsity} must be in 1..={cap}")));
    }
    Ok(())
}

/// Keeps the `S` atoms with the largest `|⟨s, ψ_j⟩|` and fits `s` on them by least squares.
pub fn thresholding_recover(phi: &DenseMatrix, s: &[f64], sparsity: usize) -> Result<RecoveryResult, RecoveryError> {
    check_system(phi, s)?;
    check_sparsity(phi, sparsity)?;
    let corr = phi.tr_mul_vec(s);
    let mut order: Vec<usize> = (0..phi.cols()).collect();
    // Stable sort keeps the lowest index first among equal magnitudes.
    order.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()));
    let support = sorted(&order[..sparsity]);
    match refit(phi, s, &support) {
        Ok(x) => Ok(RecoveryResult::new(phi, s, x, support, 1, Algorithm::Thresholding, true)),
        Err(RefitError::Rank(rank_ratio)) => Err(RecoveryError::RankDeficient {
            rank_ratio,
            partial: Box::new(RecoveryResult::new(
                phi,
                s,
                vec![0.0; phi.cols()],
                support,
                1,
                Algorithm::Thresholding,
                false,
            )),
        }),
        Err(RefitError::Other(e)) => Err(e),
    }
}

/// Orthogonal matching pursuit. Each iteration adds the unselected atom most
/// correlated with the residual, then refits on all selected atoms.
pub fn omp_recover(phi: &DenseMatrix, s: &[f64], stop: StopRule) -> Result<RecoveryResult, RecoveryError> {
    check_system(phi, s)?;
    let limit = match stop {
        StopRule::MaxAtoms(k) => {
            check_sparsity(phi, k)?;
            k
        }
        StopRule::ResidualTol(rho) => {
            if !(rho >= 0.0) || !rho.is_finite() {
                return Err(RecoveryError::InvalidInput(format!("residual tolerance {rho} must be >= 0")));
            }
            phi.rows().min(phi.cols())
        }
    };
    let k = phi.cols();
    let s_norm = norm2(s);
    let mut x = vec![0.0; k];
    let mut selected: Vec<usize> = Vec::with_capacity(limit);
    let mut is_selected = vec![false; k];
    let mut r = s.to_vec();
    let mut r_norm = s_norm;
    let exact = |norm: f64| norm <= 1e-14 * s_norm;

    let result = |x: Vec<f64>, selected: &[usize], converged: bool| {
        let iterations = selected.len();
        RecoveryResult::new(phi, s, x, sorted(selected), iterations, Algorithm::Omp, converged)
    };

    while selected.len() < limit {
        if exact(r_norm) {
            break;
        }
        if let StopRule::ResidualTol(rho) = stop {
            if r_norm <= rho {
                break;
            }
        }
        let corr = phi.tr_mul_vec(&r);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in corr.iter().enumerate() {
            if is_selected[j] {
                continue;
            }
            if best.map_or(true, |(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let (j, _) = best.expect("fewer atoms selected than columns");
        selected.push(j);
        is_selected[j] = true;

        let next = match refit(phi, s, &selected) {
            Ok(next) => next,
            Err(RefitError::Rank(rank_ratio)) => {
                selected.pop();
                return Err(RecoveryError::RankDeficient {
                    rank_ratio,
                    partial: Box::new(result(x, &selected, false)),
                });
            }
            Err(RefitError::Other(e)) => return Err(e),
        };
        let fit = phi.mul_vec(&next);
        let next_r: Vec<f64> = s.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let next_norm = norm2(&next_r);
        if !exact(next_norm) && r_norm - next_norm <= STALL_TOLERANCE * s_norm {
            return Err(RecoveryError::Stalled {
                iteration: selected.len(),
                partial: Box::new(result(next, &selected, false)),
            });
        }
        x = next;
        r = next_r;
        r_norm = next_norm;
    }

    let converged = match stop {
        StopRule::MaxAtoms(_) => true,
        StopRule::ResidualTol(rho) => r_norm <= rho || exact(r_norm),
    };
    Ok(result(x, &selected, converged))
}
