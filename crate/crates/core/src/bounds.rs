//! Closed-form sample bounds, failure probabilities and recovery conditions.
//!
//! Sample counts come back as ceilings (`u64`); every count also has a
//! `*_real` accessor returning the unrounded right-hand side.

use thiserror::Error;

use crate::dictionary::Dictionary;
use crate::measurement::{ip_constant_c1, ip_constant_c2};
use crate::numerics::{dot, norm2};
use crate::recovery::SparseSignal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("recovery condition fails: |x_min|/|x|_inf = {ratio} <= {threshold}")]
    NotRecoverable { ratio: f64, threshold: f64 },
    #[error("signal D x is zero")]
    ZeroSignal,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), BoundsError> {
    if ok {
        Ok(())
    } else {
        Err(BoundsError::OutOfRange(msg()))
    }
}

fn check_delta(delta: f64) -> Result<(), BoundsError> {
    ensure(delta > 0.0 && delta < 1.0, || format!("delta = {delta} must lie in (0, 1)"))
}

fn check_positive(name: &str, v: f64) -> Result<(), BoundsError> {
    ensure(v > 0.0 && v.is_finite(), || format!("{name} = {v} must be positive"))
}

fn check_sparsity(s: usize, k: usize) -> Result<(), BoundsError> {
    ensure(s >= 1 && s <= k, || format!("need 1 <= S <= K, got S = {s}, K = {k}"))
}

fn ceil_count(v: f64) -> u64 {
    v.ceil().max(0.0) as u64
}

/// `δ_{3S} + 3 δ_{4S} < 2`, the restricted isometry condition for basis pursuit.
pub fn bp_ric_condition(delta3s: f64, delta4s: f64) -> bool {
    delta3s + 3.0 * delta4s < 2.0
}

/// `δ_S(D) + δ (1 + δ_S(D))`, the isometry constant of `A D` when `A` is a
/// `δ`-isometry on the spans of `S` atoms.
pub fn composed_ric_bound(delta_s_dict: f64, delta: f64) -> f64 {
    delta_s_dict + delta * (1.0 + delta_s_dict)
}

/// `ln C(K, S)` through log-gamma.
pub fn ln_binomial(k: usize, s: usize) -> f64 {
    let (k, s) = (k as f64, s as f64);
    libm::lgamma(k + 1.0) - libm::lgamma(s + 1.0) - libm::lgamma(k - s + 1.0)
}

/// `2 (1 + 12/δ)^S exp(−(c/9) δ² n)`, the failure probability of a `δ`-isometry
/// on one `S`-dimensional subspace. Not clamped to 1.
pub fn local_iso_failure_prob(s: usize, delta: f64, n: usize, c: f64) -> Result<f64, BoundsError> {
    check_delta(delta)?;
    check_positive("c", c)?;
    let ln = std::f64::consts::LN_2 + s as f64 * (12.0 / delta).ln_1p() - c / 9.0 * delta * delta * n as f64;
    Ok(ln.exp())
}

/// Union bound of [`local_iso_failure_prob`] over all `C(K, S)` supports.
pub fn global_ric_failure_prob(s: usize, k: usize, delta: f64, n: usize, c: f64) -> Result<f64, BoundsError> {
    check_sparsity(s, k)?;
    let local = local_iso_failure_prob(s, delta, n, c)?;
    Ok((ln_binomial(k, s) + local.ln()).exp())
}

fn check_sample_inputs(s: usize, k: usize, t: f64, c: f64) -> Result<(), BoundsError> {
    check_sparsity(s, k)?;
    check_positive("t", t)?;
    check_positive("c", c)
}

/// `(9/c) δ⁻² (S ln(K/S) + ln(2e(1 + 12/δ)) + t)`.
pub fn sample_bound_bp_real(s: usize, k: usize, delta: f64, t: f64, c: f64) -> Result<f64, BoundsError> {
    check_sample_inputs(s, k, t, c)?;
    check_delta(delta)?;
    let sf = s as f64;
    let tail = (2.0 * std::f64::consts::E * (1.0 + 12.0 / delta)).ln();
    Ok(9.0 / c / (delta * delta) * (sf * (k as f64 / sf).ln() + tail + t))
}

/// Samples that make `A D` satisfy `δ_S ≤ composed_ric_bound(δ_S(D), δ)`
/// with probability at least `1 − e^{−t}`.
pub fn sample_bound_bp(s: usize, k: usize, delta: f64, t: f64, c: f64) -> Result<u64, BoundsError> {
    sample_bound_bp_real(s, k, delta, t, c).map(ceil_count)
}

/// As [`sample_bound_bp_real`] with `S ln(e(1 + 12/δ)) + ln 2` in place of
/// `ln(2e(1 + 12/δ))`, the term the union-bound argument actually produces.
pub fn sample_bound_bp_strict_real(s: usize, k: usize, delta: f64, t: f64, c: f64) -> Result<f64, BoundsError> {
    check_sample_inputs(s, k, t, c)?;
    check_delta(delta)?;
    let sf = s as f64;
    let tail = sf * (std::f64::consts::E * (1.0 + 12.0 / delta)).ln() + std::f64::consts::LN_2;
    Ok(9.0 / c / (delta * delta) * (sf * (k as f64 / sf).ln() + tail + t))
}

pub fn sample_bound_bp_strict(s: usize, k: usize, delta: f64, t: f64, c: f64) -> Result<u64, BoundsError> {
    sample_bound_bp_strict_real(s, k, delta, t, c).map(ceil_count)
}

/// Isometry level of `A` used for dictionaries with `δ_S(D) ≤ 1/16`; it makes
/// the composed constant exactly 1/3.
pub const COROLLARY_DELTA: f64 = 13.0 / 51.0;

/// `(C₁, C₂)` of the coherence-based sample bound: `C₁ = 9 (51/13)² / c`,
/// `C₂ = ln(1250/13) + 1`.
pub fn corollary_constants(c: f64) -> (f64, f64) {
    let ratio = 51.0f64 / 13.0;
    (9.0 * ratio * ratio / c, (1250.0f64 / 13.0).ln() + 1.0)
}

/// `S − 1 ≤ 1/(16 μ)`, the sparsity condition under which `δ_S(D) ≤ 1/16`.
pub fn corollary_sparsity_condition(s: usize, mu: f64) -> bool {
    (s as f64 - 1.0) * 16.0 * mu <= 1.0
}

/// `C₁ (S ln(K/S) + C₂ + t)`; samples for `δ_S(A D) ≤ 1/3` when the caller
/// has checked [`corollary_sparsity_condition`].
pub fn sample_bound_corollary_real(s: usize, k: usize, t: f64, c: f64) -> Result<f64, BoundsError> {
    check_sample_inputs(s, k, t, c)?;
    let (c1, c2) = corollary_constants(c);
    let sf = s as f64;
    Ok(c1 * (sf * (k as f64 / sf).ln() + c2 + t))
}

pub fn sample_bound_corollary(s: usize, k: usize, t: f64, c: f64) -> Result<u64, BoundsError> {
    sample_bound_corollary_real(s, k, t, c).map(ceil_count)
}

/// `4 C₁ + 2 C₂` of the inner-product bound.
pub fn thresholding_c3() -> f64 {
    4.0 * ip_constant_c1() + 2.0 * ip_constant_c2()
}

/// `C(ε) = 4 C₁ ε⁻² + 2 C₂ ε⁻¹`.
pub fn thresholding_constant(eps: f64) -> Result<f64, BoundsError> {
    ensure(eps > 0.0 && eps <= 1.0, || format!("eps = {eps} must lie in (0, 1]"))?;
    Ok(4.0 * ip_constant_c1() / (eps * eps) + 2.0 * ip_constant_c2() / eps)
}

/// `C(ε) (ln(2K) + t)`.
pub fn thresholding_sample_bound_real(eps: f64, k: usize, t: f64) -> Result<f64, BoundsError> {
    ensure(k >= 1, || "K must be at least 1".into())?;
    check_positive("t", t)?;
    Ok(thresholding_constant(eps)? * ((2.0 * k as f64).ln() + t))
}

/// Samples for thresholding to keep a correlation margin `ε` with probability `1 − e^{−t}`.
pub fn thresholding_sample_bound(eps: f64, k: usize, t: f64) -> Result<u64, BoundsError> {
    thresholding_sample_bound_real(eps, k, t).map(ceil_count)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginReport {
    pub epsilon: f64,
    pub achievable: bool,
    /// [`thresholding_sample_bound`] at `t = 1`, when the margin is positive.
    pub n_required: Option<u64>,
}

/// `ε = min_{i∈Λ} |⟨y, φ_i⟩| − max_{k∉Λ} |⟨y, φ_k⟩|` for `y = D x / ‖D x‖₂`.
pub fn thresholding_margin(dict: &Dictionary, x: &SparseSignal) -> Result<MarginReport, BoundsError> {
    if x.len() != dict.atoms() {
        return Err(BoundsError::DimensionMismatch {
            expected: dict.atoms(),
            found: x.len(),
        });
    }
    let y = dict.matrix().mul_vec(&x.to_dense());
    let ny = norm2(&y);
    if ny == 0.0 {
        return Err(BoundsError::ZeroSignal);
    }
    let corr: Vec<f64> = dict.matrix().tr_mul_vec(&y).iter().map(|v| v.abs() / ny).collect();
    let mut in_support = vec![false; x.len()];
    x.support().iter().for_each(|&i| in_support[i] = true);
    let good = x.support().iter().map(|&i| corr[i]).fold(f64::INFINITY, f64::min);
    let bad = (0..x.len())
        .filter(|&i| !in_support[i])
        .map(|i| corr[i])
        .fold(0.0f64, f64::max);
    let epsilon = good - bad;
    let achievable = epsilon > 0.0;
    let n_required = if achievable {
        Some(thresholding_sample_bound(epsilon.min(1.0), dict.atoms(), 1.0)?)
    } else {
        None
    };
    Ok(MarginReport {
        epsilon,
        achievable,
        n_required,
    })
}

fn dynamic_ratio(x: &SparseSignal) -> f64 {
    let (lo, hi) = x
        .coefficients()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c.abs()), hi.max(c.abs())));
    lo / hi
}

/// `|x_min| / ‖x‖_∞ > μ₁(S) + μ₁(S − 1)`.
pub fn thresholding_recovery_condition(x: &SparseSignal, mu1_s: f64, mu1_sm1: f64) -> bool {
    x.sparsity() > 0 && dynamic_ratio(x) > mu1_s + mu1_sm1
}

/// `C₃ S (1 + μ₁(S−1)) (ln(2K) + t) (|x_min|/‖x‖_∞ − μ₁(S) − μ₁(S−1))⁻²`.
pub fn thresholding_sample_bound_coherent_real(
    x: &SparseSignal,
    mu1_s: f64,
    mu1_sm1: f64,
    t: f64,
) -> Result<f64, BoundsError> {
    check_positive("t", t)?;
    ensure(x.sparsity() > 0, || "signal must have a nonempty support".into())?;
    if !thresholding_recovery_condition(x, mu1_s, mu1_sm1) {
        return Err(BoundsError::NotRecoverable {
            ratio: dynamic_ratio(x),
            threshold: mu1_s + mu1_sm1,
        });
    }
    let gap = dynamic_ratio(x) - mu1_s - mu1_sm1;
    let s = x.sparsity() as f64;
    let k = x.len() as f64;
    Ok(thresholding_c3() * s * (1.0 + mu1_sm1) * ((2.0 * k).ln() + t) / (gap * gap))
}

pub fn thresholding_sample_bound_coherent(
    x: &SparseSignal,
    mu1_s: f64,
    mu1_sm1: f64,
    t: f64,
) -> Result<u64, BoundsError> {
    thresholding_sample_bound_coherent_real(x, mu1_s, mu1_sm1, t).map(ceil_count)
}

/// Bernstein-type tail `2 exp(−½ x² / (v + M x))` for sums of independent
/// zero-mean variables with variance proxy `v` and moment scale `M`.
pub fn bennett_tail(x: f64, v: f64, m: f64) -> Result<f64, BoundsError> {
    ensure(x >= 0.0, || format!("x = {x} must be non-negative"))?;
    check_positive("v", v)?;
    ensure(m >= 0.0, || format!("M = {m} must be non-negative"))?;
    Ok(2.0 * (-0.5 * x * x / (v + m * x)).exp())
}

/// `‖D x‖₂² / ‖x‖_∞²`, bounded by `(1 + μ₁(S−1)) S` in the coherent sample bound.
pub fn energy_ratio(dict: &Dictionary, x: &SparseSignal) -> f64 {
    let y = dict.matrix().mul_vec(&x.to_dense());
    let hi = x.coefficients().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    dot(&y, &y) / (hi * hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{babel, make_dirac, make_dirac_dct};
    use crate::measurement::{inner_product_tail_bound, DEFAULT_CONCENTRATION_C};
    use crate::numerics::RngStream;

    const C: f64 = DEFAULT_CONCENTRATION_C;

    #[test]
    fn bp_condition_examples() {
        assert!(bp_ric_condition(0.0, 0.0));
        assert!(bp_ric_condition(1.0 / 3.0, 1.0 / 3.0));
        assert!(!bp_ric_condition(0.5, 0.5));
    }

    #[test]
    fn composed_examples() {
        assert_eq!(composed_ric_bound(0.0, 0.2), 0.2);
        assert!((composed_ric_bound(1.0 / 16.0, 13.0 / 51.0) - 1.0 / 3.0).abs() < 1e-15);
        let (a, b) = (0.1, 0.25);
        assert!((composed_ric_bound(a, b) - (a + b + a * b)).abs() < 1e-15);
    }

    #[test]
    fn local_failure_examples() {
        let v = local_iso_failure_prob(1, 0.5, 1000, C).unwrap();
        let expect = 2.0 * 25.0 * (-(7.0 / 162.0) * 250.0f64).exp();
        assert!((v - expect).abs() <= 1e-12 * expect);
        assert!(local_iso_failure_prob(1, 0.5, 1_000_000, C).unwrap() < 1e-300);
        let mut prev = 0.0;
        for s in 1..20 {
            let v = local_iso_failure_prob(s, 0.3, 500, C).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(local_iso_failure_prob(1, 1.0, 10, C).is_err());
    }

    #[test]
    fn global_failure_examples() {
        for (s, delta, n) in [(3, 0.2, 400), (5, 0.5, 100)] {
            let g = global_ric_failure_prob(s, s, delta, n, C).unwrap();
            let l = local_iso_failure_prob(s, delta, n, C).unwrap();
            assert!((g - l).abs() <= 1e-12 * l);
        }
        for (s, k) in [(2, 10), (4, 512), (10, 3000)] {
            let (delta, n) = (0.3, 2000);
            let g = global_ric_failure_prob(s, k, delta, n, C).unwrap();
            let sf = s as f64;
            let stirling = 2.0
                * (std::f64::consts::E * k as f64 / sf).powf(sf)
                * (1.0 + 12.0 / delta).powf(sf)
                * (-C * delta * delta * n as f64 / 9.0).exp();
            assert!(g <= stirling);
            let g2 = global_ric_failure_prob(s, k, delta, 2 * n, C).unwrap();
            let prefactor = (ln_binomial(k, s) + std::f64::consts::LN_2 + sf * (12.0 / delta).ln_1p()).exp();
            assert!((g2 * prefactor / (g * g) - 1.0).abs() < 1e-9);
        }
        assert!((ln_binomial(48, 3) - 17_296f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn bp_sample_examples() {
        let delta = 13.0 / 51.0;
        let v = sample_bound_bp(4, 512, delta, 1.0, C).unwrap();
        let r = 51.0f64 / 13.0;
        let expect = (9.0 * 18.0 / 7.0) * r * r * (4.0 * 128f64.ln() + (2.0 * std::f64::consts::E * (1.0 + 12.0 * 51.0 / 13.0)).ln() + 1.0);
        assert_eq!(v, expect.ceil() as u64);
        let full = sample_bound_bp_real(4, 512, delta, 1.0, C).unwrap();
        let half = sample_bound_bp_real(4, 512, delta, 1.0, C / 2.0).unwrap();
        assert_eq!(half, 2.0 * full);
        assert!(sample_bound_bp_strict_real(4, 512, delta, 1.0, C).unwrap() > full);
        assert_eq!(
            sample_bound_bp_strict_real(1, 512, delta, 1.0, C).unwrap(),
            sample_bound_bp_real(1, 512, delta, 1.0, C).unwrap()
        );
        assert!(sample_bound_bp(0, 5, 0.5, 1.0, C).is_err());
        assert!(sample_bound_bp(6, 5, 0.5, 1.0, C).is_err());
        assert!(sample_bound_bp(1, 5, 0.5, 0.0, C).is_err());
    }

    #[test]
    fn bp_samples_monotone() {
        let k = 1000;
        let mut prev = 0;
        for s in 1..=(k as f64 / std::f64::consts::E) as usize {
            let v = sample_bound_bp(s, k, 0.3, 1.0, C).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = 0;
        for i in 1..50 {
            let v = sample_bound_bp(5, k, 0.3, i as f64 * 0.5, C).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn corollary_constants_display() {
        let (c1, c2) = corollary_constants(1.0);
        assert_eq!(format!("{c1:.2}"), "138.51");
        assert_eq!(format!("{c2:.2}"), "5.57");
        let (g1, _) = corollary_constants(C);
        assert_eq!(format!("{g1:.2}"), "356.18");
        assert!(138.51 * 18.0 / 7.0 <= 356.18);
    }

    #[test]
    fn corollary_matches_bp_bound() {
        for (s, k, t) in [(1, 64, 1.0), (4, 512, 2.0), (10, 4096, 0.5)] {
            let a = sample_bound_corollary_real(s, k, t, C).unwrap();
            let b = sample_bound_bp_real(s, k, COROLLARY_DELTA, t, C).unwrap();
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn corollary_dirac_dct_rendering() {
        let (c1, c2) = corollary_constants(C);
        for p in 3..8 {
            let k = 1usize << (2 * p + 2);
            for s in 1..=4 {
                let t = 1.5;
                let rendered = c1 * (4.0 * s as f64 * (2.0 * p as f64 * 2f64.ln() - (s as f64).ln()) + c2 + t);
                let direct = sample_bound_corollary_real(4 * s, k, t, C).unwrap();
                assert!((rendered - direct).abs() <= 1e-10 * direct);
            }
        }
        assert!(corollary_sparsity_condition(17, 1.0 / 256.0));
        assert!(!corollary_sparsity_condition(18, 1.0 / 256.0));
    }

    #[test]
    fn thresholding_constants() {
        assert_eq!(format!("{:.2}", thresholding_c3()), "17.71");
        assert!((thresholding_constant(1.0).unwrap() - thresholding_c3()).abs() < 1e-14);
        let half = thresholding_constant(0.5).unwrap();
        assert!((half - (16.0 * ip_constant_c1() + 4.0 * ip_constant_c2())).abs() < 1e-12);
        assert_eq!(format!("{half:.2}"), "55.45");
        for i in 1..=100 {
            let eps = i as f64 / 100.0;
            assert!(thresholding_constant(eps).unwrap() <= thresholding_c3() / (eps * eps) * (1.0 + 1e-15));
        }
        assert!(thresholding_constant(0.0).is_err());
        assert!(thresholding_constant(1.5).is_err());
        let n = thresholding_sample_bound(1.0, 512, 1.0).unwrap();
        assert_eq!(n, (thresholding_c3() * (1024f64.ln() + 1.0)).ceil() as u64);
    }

    #[test]
    fn margin_orthonormal() {
        let dict = make_dirac(10).unwrap();
        let x = SparseSignal::new(10, vec![1, 4, 7], vec![1.0, -1.0, 1.0]).unwrap();
        let m = thresholding_margin(&dict, &x).unwrap();
        assert!((m.epsilon - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(m.achievable);
        assert_eq!(m.n_required, Some(thresholding_sample_bound(m.epsilon, 10, 1.0).unwrap()));
    }

    #[test]
    fn margin_single_dirac_dct_atom() {
        let d = 16;
        let dict = make_dirac_dct(d).unwrap();
        let x = SparseSignal::new(2 * d, vec![0], vec![1.0]).unwrap();
        let m = thresholding_margin(&dict, &x).unwrap();
        // Brute force over all other atoms.
        let atom = dict.atom(0);
        let worst = (1..2 * d)
            .map(|k| dot(&atom, &dict.atom(k)).abs())
            .fold(0.0f64, f64::max);
        assert!((m.epsilon - (1.0 - worst)).abs() < 1e-14);
        // The largest DCT entry of the first row is sqrt(2/d) cos(π/(2d)).
        let closed = (2.0 / d as f64).sqrt() * (std::f64::consts::PI / (2.0 * d as f64)).cos();
        assert!((worst - closed).abs() < 1e-14);
    }

    #[test]
    fn margin_can_be_negative() {
        let dict = make_dirac_dct(8).unwrap();
        // Eight equal Dirac spikes correlate strongly with the constant DCT atom.
        let x = SparseSignal::new(16, (0..8).collect(), vec![1.0; 8]).unwrap();
        let m = thresholding_margin(&dict, &x).unwrap();
        assert!(!m.achievable);
        assert!(m.n_required.is_none());
        let zero = SparseSignal::new(16, vec![], vec![]).unwrap();
        assert!(matches!(thresholding_margin(&dict, &zero), Err(BoundsError::ZeroSignal)));
    }

    #[test]
    fn recovery_condition_examples() {
        let x = SparseSignal::new(8, vec![0, 3], vec![0.2, -5.0]).unwrap();
        assert!(thresholding_recovery_condition(&x, 0.0, 0.0));
        let balanced = SparseSignal::new(8, vec![0, 3], vec![1.0, -1.0]).unwrap();
        assert!(thresholding_recovery_condition(&balanced, 0.3, 0.2));
        let half = SparseSignal::new(8, vec![0, 3], vec![0.5, -1.0]).unwrap();
        assert!(!thresholding_recovery_condition(&half, 0.25, 0.25));
    }

    #[test]
    fn coherent_bound_onb_case() {
        let x = SparseSignal::new(64, vec![1, 9, 30], vec![2.0, -0.5, 1.0]).unwrap();
        let t = 1.3;
        let v = thresholding_sample_bound_coherent_real(&x, 0.0, 0.0, t).unwrap();
        let onb = thresholding_c3() * 3.0 * 16.0 * (128f64.ln() + t);
        assert!((v - onb).abs() <= 1e-12 * onb);
        let balanced = SparseSignal::new(64, vec![1, 9, 30], vec![1.0, -1.0, 1.0]).unwrap();
        let v = thresholding_sample_bound_coherent(&balanced, 0.0, 0.0, t).unwrap();
        assert_eq!(v, (thresholding_c3() * 3.0 * (128f64.ln() + t)).ceil() as u64);
        assert!(matches!(
            thresholding_sample_bound_coherent(&x, 0.2, 0.1, t),
            Err(BoundsError::NotRecoverable { .. })
        ));
    }

    #[test]
    fn coherent_bound_dirac_dct_estimate() {
        // d = 2^(2p+1), S ≤ 2^(p−2), balanced coefficients.
        for p in 2..=3u32 {
            let d = 1usize << (2 * p + 1);
            let dict = make_dirac_dct(d).unwrap();
            let mut rng = RngStream::new(p as u64);
            for s in 1..=(1usize << (p - 2)) {
                let support = rng.subset(2 * d, s);
                let x = SparseSignal::new(2 * d, support, rng.rademacher_vec(s)).unwrap();
                let mu1_s = babel(&dict, s).unwrap();
                let mu1_sm1 = if s > 1 { babel(&dict, s - 1).unwrap() } else { 0.0 };
                for t in [0.5, 1.0, 3.0] {
                    let v = thresholding_sample_bound_coherent_real(&x, mu1_s, mu1_sm1, t).unwrap();
                    let crude = 6.0 * thresholding_c3() * s as f64 * (2f64.ln() * (2 * p + 2) as f64 + t);
                    assert!(v <= crude, "p = {p}, S = {s}: {v} > {crude}");
                }
            }
        }
    }

    #[test]
    fn energy_ratio_bound() {
        let dict = make_dirac_dct(16).unwrap();
        let mut rng = RngStream::new(3);
        for s in 1..6 {
            let x = SparseSignal::new(32, rng.subset(32, s), rng.gaussian_vec(s)).unwrap();
            let mu1 = if s > 1 { babel(&dict, s - 1).unwrap() } else { 0.0 };
            assert!(energy_ratio(&dict, &x) <= (1.0 + mu1) * s as f64 + 1e-12);
        }
    }

    #[test]
    fn bennett_examples() {
        assert_eq!(bennett_tail(0.0, 1.0, 1.0).unwrap(), 2.0);
        let mut prev = 2.0;
        for i in 1..100 {
            let v = bennett_tail(i as f64 * 0.1, 2.0, 0.5).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(bennett_tail(-1.0, 1.0, 1.0).is_err());
        assert!(bennett_tail(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn bennett_substitution_matches_ip_bound() {
        // v = n (2e/√(6π)) E|Z|², M = e (E|Z|²)^{1/2}, x = n t with E|Z|² = 2.
        // The resulting tail is 2 exp(−n t² / (2 (C₁ + C₂ t))): the square root
        // of half the inner-product bound, times 2.
        let mut rng = RngStream::new(99);
        for _ in 0..20 {
            let t = 0.05 + 3.0 * rng.uniform();
            let n = 1 + rng.below(500) as usize;
            let ez2 = 2.0;
            let e = std::f64::consts::E;
            let v = n as f64 * (2.0 * e / (6.0 * std::f64::consts::PI).sqrt()) * ez2;
            let m = e * f64::sqrt(ez2);
            let bennett = bennett_tail(n as f64 * t, v, m).unwrap();
            let inner = inner_product_tail_bound(t, n);
            let expect = 2.0 * (inner / 2.0).sqrt();
            assert!((bennett - expect).abs() <= 1e-12 * expect, "t = {t}, n = {n}");
            assert!(bennett >= inner);
        }
    }
}
