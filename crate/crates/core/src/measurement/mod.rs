//! Random measurement ensembles and Monte-Carlo checks of the concentration
//! inequalities they satisfy.

mod concentration;

use thiserror::Error;

use crate::numerics::{DenseMatrix, RngStream};

pub use concentration::{
    chaos_second_moment, concentration_bound, empirical_chaos_second_moment, empirical_ip_concentration,
    empirical_ip_concentration_grid, empirical_norm_concentration, empirical_norm_concentration_grid,
    gaussian_concentration_bound, inner_product_tail_bound, ip_constant_c1, ip_constant_c2, ConcentrationReport,
    MomentEstimate, DEFAULT_CONCENTRATION_C,
};

/// Tolerance on `UᵀU = I` for basis-transformed ensembles.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("basis transform is not orthogonal: max |UᵀU − I| = {0:e}")]
    NotOrthogonal(f64),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("vector norm {0} exceeds 1")]
    NormTooLarge(f64),
    #[error("ensemble not supported here: {0}")]
    UnsupportedEnsemble(String),
}

/// Entry distribution of an unrotated ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Entries `N(0, 1/n)`.
    Gaussian,
    /// Entries `±1/√n` with equal probability.
    Bernoulli,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Bernoulli => "bernoulli",
        }
    }

    #[inline]
    fn entry(self, rng: &mut RngStream, scale: f64) -> f64 {
        match self {
            Self::Gaussian => rng.gaussian() * scale,
            Self::Bernoulli => rng.rademacher() * scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    Gaussian,
    Bernoulli,
    /// `A U` for `A` drawn from `base` and a fixed orthogonal `U`.
    BasisTransformed { base: EnsembleKind, u: DenseMatrix },
}

impl Ensemble {
    pub fn base_kind(&self) -> EnsembleKind {
        match self {
            Self::Gaussian => EnsembleKind::Gaussian,
            Self::Bernoulli => EnsembleKind::Bernoulli,
            Self::BasisTransformed { base, .. } => *base,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Gaussian => "gaussian".into(),
            Self::Bernoulli => "bernoulli".into(),
            Self::BasisTransformed { base, .. } => format!("{}-transformed", base.name()),
        }
    }
}

impl From<EnsembleKind> for Ensemble {
    fn from(kind: EnsembleKind) -> Self {
        match kind {
            EnsembleKind::Gaussian => Self::Gaussian,
            EnsembleKind::Bernoulli => Self::Bernoulli,
        }
    }
}

/// An `n × d` random matrix distribution together with the stream it draws from.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    ensemble: Ensemble,
    n: usize,
    d: usize,
    rng: RngStream,
}

impl EnsembleSpec {
    pub fn new(ensemble: impl Into<Ensemble>, n: usize, d: usize, rng: RngStream) -> Result<Self, MeasurementError> {
        let ensemble = ensemble.into();
        if n == 0 || d == 0 {
            return Err(MeasurementError::InvalidShape(format!("n = {n}, d = {d}; both must be >= 1")));
        }
        if let Ensemble::BasisTransformed { u, .. } = &ensemble {
            if u.rows() != d || u.cols() != d {
                return Err(MeasurementError::InvalidShape(format!(
                    "basis transform is {}x{}, expected {d}x{d}",
                    u.rows(),
                    u.cols()
                )));
            }
            let g = u.gram();
            let mut worst = 0.0f64;
            for i in 0..d {
                for j in 0..d {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g.get(i, j) - expect).abs());
                }
            }
            if worst > ORTHOGONALITY_TOLERANCE {
                return Err(MeasurementError::NotOrthogonal(worst));
            }
        }
        Ok(Self { ensemble, n, d, rng })
    }

    pub fn gaussian(n: usize, d: usize, seed: u64) -> Self {
        Self::new(Ensemble::Gaussian, n, d, RngStream::new(seed)).expect("n, d >= 1")
    }

    pub fn bernoulli(n: usize, d: usize, seed: u64) -> Self {
        Self::new(Ensemble::Bernoulli, n, d, RngStream::new(seed)).expect("n, d >= 1")
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    /// Same distribution, drawing from `rng` instead.
    pub fn with_rng(&self, rng: RngStream) -> Self {
        Self { rng, ..self.clone() }
    }

    /// Stream for Monte-Carlo trial `trial`.
    pub(crate) fn trial_rng(&self, trial: u64) -> RngStream {
        self.rng.child(&[trial])
    }

    fn scale(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// Fills `row` with the next row of the unrotated base matrix.
    fn next_base_row(&self, rng: &mut RngStream, row: &mut [f64]) {
        let kind = self.ensemble.base_kind();
        let scale = self.scale();
        for v in row.iter_mut() {
            *v = kind.entry(rng, scale);
        }
    }
}

/// Draws the matrix. Entries are generated row by row from the spec's stream,
/// so equal specs give equal matrices.
pub fn draw(spec: &EnsembleSpec) -> DenseMatrix {
    draw_from(spec, &mut spec.rng.clone())
}

pub(crate) fn draw_from(spec: &EnsembleSpec, rng: &mut RngStream) -> DenseMatrix {
    let (n, d) = (spec.n, spec.d);
    let mut data = vec![0.0; n * d];
    for row in data.chunks_mut(d) {
        spec.next_base_row(rng, row);
    }
    let base = DenseMatrix::new(n, d, data).expect("finite draws");
    match &spec.ensemble {
        Ensemble::BasisTransformed { u, .. } => base.matmul(u).expect("shape checked on construction"),
        _ => base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::dct_basis;
    use crate::numerics::norm2;

    #[test]
    fn bernoulli_entries_are_scaled_signs() {
        let a = draw(&EnsembleSpec::bernoulli(16, 10, 3));
        let s = 1.0 / 4.0;
        assert!(a.as_slice().iter().all(|&v| v == s || v == -s));
    }

    #[test]
    fn draw_is_deterministic() {
        let spec = EnsembleSpec::gaussian(5, 7, 99);
        assert_eq!(draw(&spec), draw(&spec));
        assert_ne!(draw(&spec), draw(&EnsembleSpec::gaussian(5, 7, 100)));
    }

    #[test]
    fn gaussian_preserves_norm_on_average() {
        let (n, d) = (64, 256);
        let a = draw(&EnsembleSpec::gaussian(n, d, 1));
        let mut rng = RngStream::new(2);
        let trials = 10_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let mut v = rng.gaussian_vec(d);
            let nv = norm2(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            total += norm2(&a.mul_vec(&v)).powi(2);
        }
        let mean = total / trials as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn basis_transform_validation() {
        let u = dct_basis(8);
        let spec = EnsembleSpec::new(
            Ensemble::BasisTransformed { base: EnsembleKind::Bernoulli, u: u.clone() },
            4,
            8,
            RngStream::new(1),
        )
        .unwrap();
        let plain = draw(&EnsembleSpec::bernoulli(4, 8, 1));
        let rotated = draw(&spec);
        let expect = plain.matmul(&u).unwrap();
        assert_eq!(rotated, expect);

        let bad = DenseMatrix::from_fn(8, 8, |i, j| if i == j { 2.0 } else { 0.0 });
        assert!(matches!(
            EnsembleSpec::new(
                Ensemble::BasisTransformed { base: EnsembleKind::Gaussian, u: bad },
                4,
                8,
                RngStream::new(1)
            ),
            Err(MeasurementError::NotOrthogonal(_))
        ));
        assert!(matches!(
            EnsembleSpec::new(
                Ensemble::BasisTransformed { base: EnsembleKind::Gaussian, u },
                4,
                7,
                RngStream::new(1)
            ),
            Err(MeasurementError::InvalidShape(_))
        ));
        assert!(EnsembleSpec::new(Ensemble::Gaussian, 0, 3, RngStream::new(0)).is_err());
    }
}
