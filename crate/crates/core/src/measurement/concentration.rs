use rayon::prelude::*;

use super::{Ensemble, EnsembleKind, EnsembleSpec, MeasurementError};
use crate::numerics::{dot, norm2};

/// Concentration constant valid for the Gaussian and Bernoulli ensembles: `1/2 − 1/9`.
pub const DEFAULT_CONCENTRATION_C: f64 = 7.0 / 18.0;

/// `4e / √(6π)`.
pub fn ip_constant_c1() -> f64 {
    4.0 * std::f64::consts::E / (6.0 * std::f64::consts::PI).sqrt()
}

/// `e √2`.
pub fn ip_constant_c2() -> f64 {
    std::f64::consts::E * std::f64::consts::SQRT_2
}

/// `2 exp(−c (n/2) ε²)`, the generic concentration bound, for `ε ∈ (0, 1/3)`.
pub fn concentration_bound(eps: f64, n: usize, c: f64) -> Result<f64, MeasurementError> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(MeasurementError::OutOfRange(format!("eps = {eps} must lie in (0, 1/3)")));
    }
    if n == 0 || !(c > 0.0) {
        return Err(MeasurementError::OutOfRange(format!("need n >= 1 and c > 0, got n = {n}, c = {c}")));
    }
    Ok(2.0 * (-c * (n as f64 / 2.0) * eps * eps).exp())
}

/// `2 exp(−(n/2)(ε²/2 − ε³/3))`, the Gaussian-ensemble bound, for `ε ∈ (0, 1)`.
pub fn gaussian_concentration_bound(eps: f64, n: usize) -> Result<f64, MeasurementError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MeasurementError::OutOfRange(format!("eps = {eps} must lie in (0, 1)")));
    }
    let nf = n as f64;
    Ok(2.0 * (-(nf / 2.0) * (eps * eps / 2.0 - eps.powi(3) / 3.0)).exp())
}

/// `2 exp(−n t² / (C₁ + C₂ t))`, the inner-product deviation bound.
/// Non-positive `t` gives the trivial value 2.
pub fn inner_product_tail_bound(t: f64, n: usize) -> f64 {
    if t <= 0.0 {
        return 2.0;
    }
    2.0 * (-(n as f64) * t * t / (ip_constant_c1() + ip_constant_c2() * t)).exp()
}

/// `E|Z|²` of the order-2 chaos behind the inner-product bound.
///
/// Gaussian: `⟨x,y⟩² + ‖x‖²‖y‖²`. Bernoulli drops the diagonal `(g_k² − 1)`
/// terms and the matching cross terms: subtract `2 Σ x_k² y_k²`.
pub fn chaos_second_moment(x: &[f64], y: &[f64], kind: EnsembleKind) -> f64 {
    assert_eq!(x.len(), y.len(), "chaos_second_moment: length mismatch");
    let xy = dot(x, y);
    let gaussian = xy * xy + dot(x, x) * dot(y, y);
    match kind {
        EnsembleKind::Gaussian => gaussian,
        EnsembleKind::Bernoulli => {
            let diag: f64 = x.iter().zip(y).map(|(a, b)| a * a * b * b).sum();
            gaussian - 2.0 * diag
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    /// ε for norm events, t for inner-product events.
    pub parameter: f64,
    pub n: usize,
    pub trials: usize,
    pub events: usize,
    pub empirical_frequency: f64,
    pub theoretical_bound: f64,
    /// `3 √(p̂(1 − p̂)/trials) + 1/trials`.
    pub slack: f64,
    pub satisfied: bool,
}

impl ConcentrationReport {
    fn new(parameter: f64, n: usize, trials: usize, events: usize, theoretical_bound: f64) -> Self {
        let tf = trials as f64;
        let p = events as f64 / tf;
        let slack = 3.0 * (p * (1.0 - p) / tf).sqrt() + 1.0 / tf;
        Self {
            parameter,
            n,
            trials,
            events,
            empirical_frequency: p,
            theoretical_bound,
            slack,
            satisfied: p <= theoretical_bound + slack,
        }
    }
}

fn check_trials(trials: usize) -> Result<(), MeasurementError> {
    if trials == 0 {
        return Err(MeasurementError::OutOfRange("trials must be at least 1".into()));
    }
    Ok(())
}

/// `‖A v‖²` for a fresh draw of `A` per trial, rows streamed without storing `A`.
fn norm_samples(spec: &EnsembleSpec, v: &[f64], trials: usize) -> Vec<f64> {
    let w = match spec.ensemble() {
        Ensemble::BasisTransformed { u, .. } => u.mul_vec(v),
        _ => v.to_vec(),
    };
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = spec.trial_rng(trial);
            let mut row = vec![0.0; spec.cols()];
            let mut acc = 0.0;
            for _ in 0..spec.rows() {
                spec.next_base_row(&mut rng, &mut row);
                acc += dot(&row, &w).powi(2);
            }
            acc
        })
        .collect()
}

/// `⟨A x, A y⟩` for a fresh draw of `A` per trial.
fn ip_samples(spec: &EnsembleSpec, x: &[f64], y: &[f64], trials: usize) -> Vec<f64> {
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = spec.trial_rng(trial);
            let mut row = vec![0.0; spec.cols()];
            let mut acc = 0.0;
            for _ in 0..spec.rows() {
                spec.next_base_row(&mut rng, &mut row);
                acc += dot(&row, x) * dot(&row, y);
            }
            acc
        })
        .collect()
}

/// Frequency of `|‖Av‖² − ‖v‖²| ≥ ε‖v‖²` against the generic bound with constant `c`,
/// for several `ε` over the same draws.
pub fn empirical_norm_concentration_grid(
    spec: &EnsembleSpec,
    v: &[f64],
    eps_list: &[f64],
    trials: usize,
    c: f64,
) -> Result<Vec<ConcentrationReport>, MeasurementError> {
    check_trials(trials)?;
    if v.len() != spec.cols() {
        return Err(MeasurementError::InvalidShape(format!(
            "vector length {} does not match d = {}",
            v.len(),
            spec.cols()
        )));
    }
    let v2 = dot(v, v);
    if v2 == 0.0 {
        return Err(MeasurementError::OutOfRange("v must be nonzero".into()));
    }
    let bounds = eps_list
        .iter()
        .map(|&eps| concentration_bound(eps, spec.rows(), c))
        .collect::<Result<Vec<_>, _>>()?;
    let samples = norm_samples(spec, v, trials);
    Ok(eps_list
        .iter()
        .zip(bounds)
        .map(|(&eps, bound)| {
            let events = samples.iter().filter(|&&s| (s - v2).abs() >= eps * v2).count();
            ConcentrationReport::new(eps, spec.rows(), trials, events, bound)
        })
        .collect())
}

pub fn empirical_norm_concentration(
    spec: &EnsembleSpec,
    v: &[f64],
    eps: f64,
    trials: usize,
) -> Result<ConcentrationReport, MeasurementError> {
    empirical_norm_concentration_grid(spec, v, &[eps], trials, DEFAULT_CONCENTRATION_C).map(|mut r| r.remove(0))
}

fn check_ip_inputs(spec: &EnsembleSpec, x: &[f64], y: &[f64]) -> Result<(), MeasurementError> {
    if matches!(spec.ensemble(), Ensemble::BasisTransformed { .. }) {
        return Err(MeasurementError::UnsupportedEnsemble(
            "inner-product concentration needs a plain Gaussian or Bernoulli ensemble".into(),
        ));
    }
    if x.len() != spec.cols() || y.len() != spec.cols() {
        return Err(MeasurementError::InvalidShape(format!(
            "vector lengths {}, {} do not match d = {}",
            x.len(),
            y.len(),
            spec.cols()
        )));
    }
    for norm in [norm2(x), norm2(y)] {
        if norm > 1.0 + 1e-12 {
            return Err(MeasurementError::NormTooLarge(norm));
        }
    }
    Ok(())
}

/// Frequency of `|⟨Ax, Ay⟩ − ⟨x, y⟩| ≥ t` against [`inner_product_tail_bound`],
/// for several `t` over the same draws.
pub fn empirical_ip_concentration_grid(
    spec: &EnsembleSpec,
    x: &[f64],
    y: &[f64],
    t_list: &[f64],
    trials: usize,
) -> Result<Vec<ConcentrationReport>, MeasurementError> {
    check_trials(trials)?;
    check_ip_inputs(spec, x, y)?;
    if let Some(t) = t_list.iter().find(|&&t| !(t > 0.0)) {
        return Err(MeasurementError::OutOfRange(format!("t = {t} must be positive")));
    }
    let xy = dot(x, y);
    let samples = ip_samples(spec, x, y, trials);
    Ok(t_list
        .iter()
        .map(|&t| {
            let events = samples.iter().filter(|&&s| (s - xy).abs() >= t).count();
            ConcentrationReport::new(t, spec.rows(), trials, events, inner_product_tail_bound(t, spec.rows()))
        })
        .collect())
}

pub fn empirical_ip_concentration(
    spec: &EnsembleSpec,
    x: &[f64],
    y: &[f64],
    t: f64,
    trials: usize,
) -> Result<ConcentrationReport, MeasurementError> {
    empirical_ip_concentration_grid(spec, x, y, &[t], trials).map(|mut r| r.remove(0))
}

/// Sample estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `n · Var(⟨Ax, Ay⟩)` over fresh draws; its expectation is [`chaos_second_moment`].
/// The standard error comes from the sample fourth central moment.
pub fn empirical_chaos_second_moment(
    spec: &EnsembleSpec,
    x: &[f64],
    y: &[f64],
    trials: usize,
) -> Result<MomentEstimate, MeasurementError> {
    if trials < 2 {
        return Err(MeasurementError::OutOfRange("need at least 2 trials".into()));
    }
    check_ip_inputs(spec, x, y)?;
    let root_n = (spec.rows() as f64).sqrt();
    let z: Vec<f64> = ip_samples(spec, x, y, trials).into_iter().map(|s| root_n * s).collect();
    let tf = trials as f64;
    let mean = z.iter().sum::<f64>() / tf;
    let m2 = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tf;
    let m4 = z.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / tf;
    Ok(MomentEstimate {
        value: m2 * tf / (tf - 1.0),
        std_error: ((m4 - m2 * m2).max(0.0) / tf).sqrt(),
    })
}
