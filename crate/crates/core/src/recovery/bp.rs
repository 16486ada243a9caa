//! Basis pursuit.
//!
//! Noiseless: `min ‖x‖₁ s.t. Φx = s` as the linear program
//! `min 1ᵀ(u + v) s.t. Φ(u − v) = s, u, v ≥ 0`, solved with a Mehrotra
//! predictor-corrector interior-point method on the normal equations
//! `Φ diag(w) Φᵀ dy = r`.
//!
//! Noisy: `min ½‖s − Φx‖² + λ‖x‖₁` by coordinate descent, with `λ` bisected
//! on a log scale until `‖s − Φx‖₂ ∈ [0.95η, η]`.

use super::{check_system, residual_norm, Algorithm, RecoveryError, RecoveryResult};
use crate::numerics::{dot, norm2, sym_eig, Cholesky, DenseMatrix};

/// Fraction of the distance to the boundary taken by each interior-point step.
const STEP_SCALE: f64 = 0.995;
/// Relative range tolerance for the noiseless feasibility check.
const RANGE_TOLERANCE: f64 = 1e-10;
/// Bisection window for the noisy residual, as a fraction of `η`.
const RESIDUAL_WINDOW: f64 = 0.95;
const MAX_BISECTIONS: usize = 30;
const LAMBDA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpOptions {
    pub noise_level: f64,
    pub duality_gap_tol: f64,
    pub max_iterations: usize,
    /// Support threshold relative to `max |x̂_i|`.
    pub support_threshold: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        Self {
            noise_level: 0.0,
            duality_gap_tol: 1e-8,
            max_iterations: 100,
            support_threshold: 1e-4,
        }
    }
}

impl BpOptions {
    pub fn noisy(eta: f64) -> Self {
        Self {
            noise_level: eta,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), RecoveryError> {
        let ok = self.noise_level >= 0.0
            && self.noise_level.is_finite()
            && self.duality_gap_tol > 0.0
            && self.support_threshold > 0.0
            && self.max_iterations > 0;
        if ok {
            Ok(())
        } else {
            Err(RecoveryError::InvalidInput(format!("invalid basis pursuit options {self:?}")))
        }
    }
}

/// `ℓ1`-minimal solution of `Φx = s` (`η = 0`) or a point with
/// `‖s − Φx‖₂ ≤ η` found by residual-targeted `ℓ1`-penalized least squares.
pub fn basis_pursuit_recover(phi: &DenseMatrix, s: &[f64], opts: &BpOptions) -> Result<RecoveryResult, RecoveryError> {
    check_system(phi, s)?;
    opts.validate()?;
    let k = phi.cols();
    if opts.noise_level == 0.0 {
        if norm2(s) == 0.0 {
            return Ok(RecoveryResult::new(phi, s, vec![0.0; k], Vec::new(), 0, Algorithm::BasisPursuit, true));
        }
        noiseless(phi, s, opts)
    } else {
        noisy(phi, s, opts)
    }
}

fn support_of(x: &[f64], tau: f64) -> Vec<usize> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Vec::new();
    }
    (0..x.len()).filter(|&i| x[i].abs() > tau * peak).collect()
}

fn finish(
    phi: &DenseMatrix,
    s: &[f64],
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    opts: &BpOptions,
) -> Result<RecoveryResult, RecoveryError> {
    let support = support_of(&x, opts.support_threshold);
    let result = RecoveryResult::new(phi, s, x, support, iterations, Algorithm::BasisPursuit, converged);
    if converged {
        Ok(result)
    } else {
        Err(RecoveryError::MaxIterationsExceeded {
            iterations,
            best: Box::new(result),
        })
    }
}

/// A row-equivalent system with full row rank: `(Qᵀ Φ, Qᵀ s)` where the
/// columns of `Q` span `range(Φ)`. `None` when `Φ` already has full row rank.
struct RowSpace {
    q: DenseMatrix,
}

impl RowSpace {
    fn of(phi: &DenseMatrix) -> Result<Option<Self>, RecoveryError> {
        let to_err = |e: crate::numerics::NumericsError| RecoveryError::InvalidInput(e.to_string());
        if phi.rows() <= phi.cols() {
            let outer = phi.weighted_row_gram(&vec![1.0; phi.cols()]);
            if Cholesky::new(&outer, 1e-12).is_ok() {
                return Ok(None);
            }
            let eig = sym_eig(&outer).map_err(to_err)?;
            let top = eig.values.last().copied().unwrap_or(0.0);
            let keep: Vec<usize> = (0..phi.rows()).filter(|&i| eig.values[i] > 1e-12 * top).collect();
            return Ok(Some(Self {
                q: eig.vectors.select_columns(&keep),
            }));
        }
        // Tall: range(Φ) is spanned by Φ v / √λ over eigenpairs of the smaller ΦᵀΦ.
        let eig = sym_eig(&phi.gram()).map_err(to_err)?;
        let top = eig.values.last().copied().unwrap_or(0.0);
        let keep: Vec<usize> = (0..phi.cols()).filter(|&i| eig.values[i] > 1e-12 * top).collect();
        let columns: Vec<Vec<f64>> = keep
            .iter()
            .map(|&i| {
                let scale = 1.0 / eig.values[i].sqrt();
                phi.mul_vec(&eig.vectors.column(i)).into_iter().map(|v| v * scale).collect()
            })
            .collect();
        let q = DenseMatrix::from_columns(phi.rows(), &columns).map_err(to_err)?;
        Ok(Some(Self { q }))
    }

    fn distance(&self, s: &[f64]) -> f64 {
        let proj = self.q.mul_vec(&self.q.tr_mul_vec(s));
        norm2(&crate::numerics::sub(s, &proj))
    }

    fn reduce(&self, phi: &DenseMatrix, s: &[f64]) -> (DenseMatrix, Vec<f64>) {
        let qt = self.q.transpose();
        (qt.matmul(phi).expect("conforming shapes"), qt.mul_vec(s))
    }
}

/// Solves `M y = r` for symmetric positive semi-definite `M`, adding a growing
/// diagonal shift until the factorization succeeds.
fn solve_spd(m: &DenseMatrix, r: &[f64]) -> Vec<f64> {
    let n = m.rows();
    if let Ok(ch) = Cholesky::new(m, 1e-15) {
        return ch.solve(r);
    }
    let scale = (0..n).map(|i| m.get(i, i)).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut shift = 1e-14 * scale;
    loop {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted.set(i, i, m.get(i, i) + shift);
        }
        if let Ok(ch) = Cholesky::new(&shifted, 0.0) {
            return ch.solve(r);
        }
        shift *= 100.0;
    }
}

/// Largest `α ∈ (0, 1]` with `x + α dx ≥ 0`.
fn max_step(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, &d)| d < 0.0)
        .fold(1.0f64, |a, (&v, &d)| a.min(-v / d))
}

/// Interior-point state on the split variables `w = (u, v)` with dual `(y, z)`.
struct Lp<'a> {
    phi: &'a DenseMatrix,
    k: usize,
}

impl Lp<'_> {
    /// `Â w = Φ(u − v)`.
    fn apply(&self, w: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = (0..self.k).map(|i| w[i] - w[self.k + i]).collect();
        self.phi.mul_vec(&diff)
    }

    /// `Âᵀ y = (Φᵀy, −Φᵀy)`.
    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let t = self.phi.tr_mul_vec(y);
        t.iter().copied().chain(t.iter().map(|v| -v)).collect()
    }

    /// Newton direction for the complementarity target `rc`, given `d = w / z`.
    fn direction(
        &self,
        m: &DenseMatrix,
        d: &[f64],
        z: &[f64],
        rp: &[f64],
        rd: &[f64],
        rc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let nn = 2 * self.k;
        // M dy = rp − Â Z⁻¹ rc + Â D rd
        let t: Vec<f64> = (0..nn).map(|i| -rc[i] / z[i] + d[i] * rd[i]).collect();
        let a_t = self.apply(&t);
        let rhs: Vec<f64> = rp.iter().zip(&a_t).map(|(a, b)| a + b).collect();
        let dy = solve_spd(m, &rhs);
        let at_dy = self.apply_t(&dy);
        let dz: Vec<f64> = (0..nn).map(|i| rd[i] - at_dy[i]).collect();
        let dw: Vec<f64> = (0..nn).map(|i| rc[i] / z[i] - d[i] * dz[i]).collect();
        (dw, dy, dz)
    }
}

fn noiseless(phi: &DenseMatrix, s: &[f64], opts: &BpOptions) -> Result<RecoveryResult, RecoveryError> {
    let (x, iterations, converged) = match RowSpace::of(phi)? {
        None => interior_point(phi, s, opts),
        Some(space) => {
            let distance = space.distance(s);
            if distance > RANGE_TOLERANCE * norm2(s).max(1.0) {
                return Err(RecoveryError::Infeasible { distance });
            }
            let (phi_r, s_r) = space.reduce(phi, s);
            interior_point(&phi_r, &s_r, opts)
        }
    };
    let x = polish(phi, s, x, opts);
    finish(phi, s, x, iterations, converged, opts)
}

fn interior_point(phi: &DenseMatrix, s: &[f64], opts: &BpOptions) -> (Vec<f64>, usize, bool) {
    let k = phi.cols();
    let nn = 2 * k;
    let lp = Lp { phi, k };
    let s_norm = norm2(s);

    // Mehrotra's starting point from the minimum-norm solution x₀ = Φᵀ(ΦΦᵀ)⁻¹s.
    let outer = phi.weighted_row_gram(&vec![1.0; k]);
    let x0 = phi.tr_mul_vec(&solve_spd(&outer, s));
    let mut w: Vec<f64> = x0.iter().map(|v| v / 2.0).chain(x0.iter().map(|v| -v / 2.0)).collect();
    let mut y = vec![0.0; phi.rows()];
    let mut z = vec![1.0; nn];
    let shift = (-1.5 * w.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    w.iter_mut().for_each(|v| *v += shift);
    let wz = dot(&w, &z);
    let (sum_w, sum_z) = (w.iter().sum::<f64>(), z.iter().sum::<f64>());
    let dw0 = 0.5 * wz / sum_z;
    let dz0 = if sum_w > 0.0 { 0.5 * wz / sum_w } else { 1.0 };
    w.iter_mut().for_each(|v| *v += dw0);
    z.iter_mut().for_each(|v| *v += dz0);
    if w.iter().any(|&v| v <= 0.0) {
        w.iter_mut().for_each(|v| *v = v.max(1.0));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let aw = lp.apply(&w);
        let rp: Vec<f64> = s.iter().zip(&aw).map(|(a, b)| a - b).collect();
        let aty = lp.apply_t(&y);
        let rd: Vec<f64> = (0..nn).map(|i| 1.0 - aty[i] - z[i]).collect();
        let primal = w.iter().sum::<f64>();
        let dual = dot(s, &y);
        let gap = (primal - dual).abs() / (1.0 + primal.abs());
        let p_inf = norm2(&rp) / (1.0 + s_norm);
        let d_inf = norm2(&rd) / (1.0 + (nn as f64).sqrt());
        if gap <= opts.duality_gap_tol && p_inf <= opts.duality_gap_tol && d_inf <= opts.duality_gap_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mu = dot(&w, &z) / nn as f64;
        let d: Vec<f64> = w.iter().zip(&z).map(|(a, b)| a / b).collect();
        let merged: Vec<f64> = (0..k).map(|i| d[i] + d[k + i]).collect();
        let m = phi.weighted_row_gram(&merged);

        // Predictor.
        let rc_aff: Vec<f64> = w.iter().zip(&z).map(|(a, b)| -a * b).collect();
        let (dw_a, _, dz_a) = lp.direction(&m, &d, &z, &rp, &rd, &rc_aff);
        let ap = max_step(&w, &dw_a);
        let ad = max_step(&z, &dz_a);
        let mu_aff = (0..nn)
            .map(|i| (w[i] + ap * dw_a[i]) * (z[i] + ad * dz_a[i]))
            .sum::<f64>()
            / nn as f64;
        let sigma = (mu_aff / mu).powi(3).min(1.0);

        // Corrector.
        let rc: Vec<f64> = (0..nn)
            .map(|i| sigma * mu - w[i] * z[i] - dw_a[i] * dz_a[i])
            .collect();
        let (dw, dy, dz) = lp.direction(&m, &d, &z, &rp, &rd, &rc);
        let ap = (STEP_SCALE * max_step(&w, &dw)).min(1.0);
        let ad = (STEP_SCALE * max_step(&z, &dz)).min(1.0);
        for i in 0..nn {
            w[i] += ap * dw[i];
            z[i] += ad * dz[i];
        }
        for (yi, dyi) in y.iter_mut().zip(&dy) {
            *yi += ad * dyi;
        }
        if w.iter().chain(&z).any(|v| !v.is_finite()) {
            break;
        }
    }

    let x: Vec<f64> = (0..k).map(|i| w[i] - w[k + i]).collect();
    (x, iterations, converged)
}

/// Replaces the interior-point iterate by the least-squares fit on its
/// support when that fit is feasible and no larger in `ℓ1`.
fn polish(phi: &DenseMatrix, s: &[f64], x: Vec<f64>, opts: &BpOptions) -> Vec<f64> {
    let support = support_of(&x, opts.support_threshold);
    if support.is_empty() || support.len() > phi.rows() {
        return x;
    }
    let Ok(fit) = super::refit(phi, s, &support) else {
        return x;
    };
    let feasible = residual_norm(phi, s, &fit) <= RANGE_TOLERANCE * norm2(s).max(1.0);
    let l1 = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>();
    if feasible && l1(&fit) <= l1(&x) * (1.0 + 1e-9) {
        fit
    } else {
        x
    }
}

/// Coordinate descent for `min ½‖s − Φx‖² + λ‖x‖₁`, warm-started at `x`.
fn lasso(phi_t: &DenseMatrix, col_sq: &[f64], s: &[f64], lambda: f64, x: &mut [f64], max_sweeps: usize) -> bool {
    let k = x.len();
    let mut r: Vec<f64> = s.to_vec();
    for j in 0..k {
        if x[j] != 0.0 {
            r.iter_mut().zip(phi_t.row(j)).for_each(|(ri, a)| *ri -= a * x[j]);
        }
    }
    let s_norm = norm2(s).max(f64::MIN_POSITIVE);
    for _ in 0..max_sweeps {
        let mut biggest = 0.0f64;
        for j in 0..k {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = phi_t.row(j);
            let rho = dot(col, &r) + col_sq[j] * x[j];
            let next = if rho > lambda {
                (rho - lambda) / col_sq[j]
            } else if rho < -lambda {
                (rho + lambda) / col_sq[j]
            } else {
                0.0
            };
            let delta = next - x[j];
            if delta != 0.0 {
                r.iter_mut().zip(col).for_each(|(ri, a)| *ri -= a * delta);
                x[j] = next;
                biggest = biggest.max(delta.abs() * col_sq[j].sqrt());
            }
        }
        if biggest <= 1e-13 * s_norm {
            return true;
        }
    }
    false
}

fn noisy(phi: &DenseMatrix, s: &[f64], opts: &BpOptions) -> Result<RecoveryResult, RecoveryError> {
    let eta = opts.noise_level;
    let k = phi.cols();
    if norm2(s) <= eta {
        return Ok(RecoveryResult::new(phi, s, vec![0.0; k], Vec::new(), 0, Algorithm::BasisPursuit, true));
    }
    let ls_distance = match RowSpace::of(phi)? {
        None => 0.0,
        Some(space) => space.distance(s),
    };
    if ls_distance > eta {
        return Err(RecoveryError::Infeasible { distance: ls_distance });
    }

    let phi_t = phi.transpose();
    let col_sq: Vec<f64> = (0..k).map(|j| dot(phi_t.row(j), phi_t.row(j))).collect();
    let lambda_max = phi.tr_mul_vec(s).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_sweeps = 100 * opts.max_iterations;
    let (mut lo, mut hi) = ((lambda_max * LAMBDA_FLOOR).ln(), lambda_max.ln());
    let mut x = vec![0.0; k];
    let mut best: Option<Vec<f64>> = None;
    let mut steps = 0;
    while steps < MAX_BISECTIONS {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        lasso(&phi_t, &col_sq, s, mid.exp(), &mut x, max_sweeps);
        let res = residual_norm(phi, s, &x);
        if res > eta {
            hi = mid;
        } else {
            best = Some(x.clone());
            if res >= RESIDUAL_WINDOW * eta {
                return finish(phi, s, x, steps, true, opts);
            }
            lo = mid;
        }
    }
    match best {
        Some(x) => finish(phi, s, x, steps, false, opts),
        None => finish(phi, s, x, steps, false, opts),
    }
}
