//! Seeded phase-transition experiments.
//!
//! Every random object is drawn from its own child stream of the config seed:
//! the measurement matrix from `(n)` in fixed mode or `(n, S, trial)` in fresh
//! mode, the signal from `(n, S, trial)`. Cells can therefore run in any order
//! on any number of threads and still give identical grids.

mod grid;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dictionary::{load_dictionary, make_dirac, make_dirac_dct, Dictionary, DictionaryError};
use crate::measurement::{draw, EnsembleKind, EnsembleSpec};
use crate::numerics::{DenseMatrix, RngStream};
use crate::recovery::{
    basis_pursuit_recover, omp_recover, support_recovered, thresholding_recover, Algorithm, BpOptions,
    RecoveryError, RecoveryResult, SparseSignal, StopRule,
};

pub use grid::{
    compare_grids, export_csv, format_rate, grid_to_csv, import_csv, parse_csv, CellDifference, Dominance,
    GridComparison, PhaseCell, PhaseGrid, CSV_HEADER,
};

const MATRIX_STREAM: u64 = 1;
const SIGNAL_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("grids do not share the same cells: {0}")]
    CellMismatch(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictionarySource {
    Dirac,
    DiracDct,
    File(PathBuf),
}

impl DictionarySource {
    pub fn name(&self) -> String {
        match self {
            Self::Dirac => "dirac".into(),
            Self::DiracDct => "dirac-dct".into(),
            Self::File(p) => p.display().to_string(),
        }
    }

    /// `dirac`, `dirac-dct`, or anything else as a file path.
    pub fn parse(s: &str) -> Self {
        match s {
            "dirac" => Self::Dirac,
            "dirac-dct" => Self::DiracDct,
            other => Self::File(PathBuf::from(other)),
        }
    }

    pub fn build(&self, d: usize) -> Result<Dictionary, ExperimentError> {
        let dict = match self {
            Self::Dirac => make_dirac(d)?,
            Self::DiracDct => make_dirac_dct(d)?,
            Self::File(p) => load_dictionary(p)?,
        };
        if dict.dim() != d {
            return Err(ExperimentError::InvalidConfig(format!(
                "dictionary has dimension {}, config says d = {d}",
                dict.dim()
            )));
        }
        Ok(dict)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffModel {
    /// i.i.d. `N(0, 1)`.
    Gaussian,
    /// i.i.d. uniform `±1`.
    UnitSign,
}

impl CoeffModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::UnitSign => "unit-sign",
        }
    }

    /// Gaussian for BP and OMP, unit-sign for thresholding.
    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Thresholding => Self::UnitSign,
            _ => Self::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMode {
    /// One matrix per `n`, shared by every `S` and trial.
    Fixed,
    /// A new matrix for every `(n, S, trial)`.
    Fresh,
}

impl MatrixMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::Fresh => "fresh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub dictionary: DictionarySource,
    pub ensemble: EnsembleKind,
    pub n_list: Vec<usize>,
    pub s_list: Vec<usize>,
    pub trials: usize,
    pub coeff_model: CoeffModel,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub bp_options: BpOptions,
    pub matrix_mode: MatrixMode,
}

impl ExperimentConfig {
    /// The published protocol: `d = 256`, Dirac-DCT, Gaussian `A`,
    /// `n ∈ {64, 96, …, 224}`, `S ∈ {4, 8, …, 64}` (thresholding `{2, 4, …, 32}`), 100 trials.
    pub fn paper_default(algorithm: Algorithm) -> Self {
        let s_list = match algorithm {
            Algorithm::Thresholding => (1..=16).map(|i| 2 * i).collect(),
            _ => (1..=16).map(|i| 4 * i).collect(),
        };
        Self {
            d: 256,
            dictionary: DictionarySource::DiracDct,
            ensemble: EnsembleKind::Gaussian,
            n_list: (0..6).map(|i| 64 + 32 * i).collect(),
            s_list,
            trials: 100,
            coeff_model: CoeffModel::default_for(algorithm),
            algorithm,
            seed: 0,
            bp_options: BpOptions::default(),
            matrix_mode: MatrixMode::Fixed,
        }
    }

    /// Checks the shape guards. `S` may exceed `n`: such cells simply fail.
    pub fn validate(&self, atoms: usize) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0 || n > 4 * self.d) {
            return bad(format!("n = {n} must lie in 1..={}", 4 * self.d));
        }
        if let Some(&s) = self.s_list.iter().find(|&&s| s == 0 || s > atoms) {
            return bad(format!("S = {s} must lie in 1..={atoms}"));
        }
        Ok(())
    }

    /// SHA-256 of a canonical description of the config.
    pub fn digest(&self) -> String {
        let text = format!(
            "d={};dict={};ens={};n={:?};s={:?};trials={};coeff={};algo={};seed={};bp=({:e},{:e},{},{:e});mode={}",
            self.d,
            self.dictionary.name(),
            self.ensemble.name(),
            self.n_list,
            self.s_list,
            self.trials,
            self.coeff_model.name(),
            self.algorithm.name(),
            self.seed,
            self.bp_options.noise_level,
            self.bp_options.duality_gap_tol,
            self.bp_options.max_iterations,
            self.bp_options.support_threshold,
            self.matrix_mode.name(),
        );
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// `S` indices uniform over all `C(K, S)` sets, with coefficients from `model`.
pub fn draw_sparse_signal(
    k: usize,
    s: usize,
    model: CoeffModel,
    rng: &mut RngStream,
) -> Result<SparseSignal, ExperimentError> {
    if s == 0 || s > k {
        return Err(ExperimentError::OutOfRange(format!("need 1 <= S <= K, got S = {s}, K = {k}")));
    }
    let support = rng.subset(k, s);
    let coefficients = (0..s)
        .map(|_| match model {
            CoeffModel::UnitSign => rng.rademacher(),
            CoeffModel::Gaussian => loop {
                let v = rng.gaussian();
                if v != 0.0 {
                    break v;
                }
            },
        })
        .collect();
    Ok(SparseSignal::new(k, support, coefficients).expect("valid by construction"))
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub runtime_s: f64,
    /// `‖x̂ − x‖_∞`, when the algorithm returned an estimate.
    pub coefficient_error: Option<f64>,
}

/// A config with its dictionary loaded, ready to run cells.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    dictionary: Dictionary,
    root: RngStream,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        let dictionary = config.dictionary.build(config.d)?;
        config.validate(dictionary.atoms())?;
        let root = RngStream::new(config.seed);
        Ok(Self {
            config,
            dictionary,
            root,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    /// The measurement matrix `A` used for cell `(n, S)` in trial `trial`.
    pub fn measurement_matrix(&self, n: usize, s: usize, trial: usize) -> DenseMatrix {
        let rng = match self.config.matrix_mode {
            MatrixMode::Fixed => self.root.child(&[MATRIX_STREAM, n as u64]),
            MatrixMode::Fresh => self.root.child(&[MATRIX_STREAM, n as u64, s as u64, trial as u64]),
        };
        let spec = EnsembleSpec::new(self.config.ensemble, n, self.config.d, rng).expect("validated shape");
        draw(&spec)
    }

    /// `Φ = A D` for cell `(n, S)` in trial `trial`.
    pub fn sensing_matrix(&self, n: usize, s: usize, trial: usize) -> DenseMatrix {
        let a = self.measurement_matrix(n, s, trial);
        a.matmul(self.dictionary.matrix()).expect("A has d columns")
    }

    pub fn signal(&self, n: usize, s: usize, trial: usize) -> Result<SparseSignal, ExperimentError> {
        let mut rng = self.root.child(&[SIGNAL_STREAM, n as u64, s as u64, trial as u64]);
        draw_sparse_signal(self.dictionary.atoms(), s, self.config.coeff_model, &mut rng)
    }

    fn recover(&self, phi: &DenseMatrix, y: &[f64], s: usize) -> Result<RecoveryResult, RecoveryError> {
        match self.config.algorithm {
            Algorithm::Thresholding => thresholding_recover(phi, y, s),
            Algorithm::Omp => omp_recover(phi, y, StopRule::MaxAtoms(s)),
            Algorithm::BasisPursuit => basis_pursuit_recover(phi, y, &self.config.bp_options),
        }
    }

    fn run_with(&self, phi: &DenseMatrix, n: usize, s: usize, trial: usize) -> Result<TrialOutcome, ExperimentError> {
        let truth = self.signal(n, s, trial)?;
        let y = phi.mul_vec(&truth.to_dense());
        let start = Instant::now();
        let result = self.recover(phi, &y, s);
        let runtime_s = start.elapsed().as_secs_f64();
        Ok(match result {
            Ok(r) => {
                let x = truth.to_dense();
                let err = r.estimate.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                TrialOutcome {
                    success: support_recovered(&r, &truth).unwrap_or(false),
                    runtime_s,
                    coefficient_error: Some(err),
                }
            }
            Err(e) => {
                log::debug!(
                    "{} failed at n = {n}, S = {s}, trial = {trial}: {e}",
                    self.config.algorithm
                );
                TrialOutcome {
                    success: false,
                    runtime_s,
                    coefficient_error: None,
                }
            }
        })
    }

    /// Runs one trial of cell `(n, S)`.
    pub fn run_trial(&self, n: usize, s: usize, trial: usize) -> Result<TrialOutcome, ExperimentError> {
        self.run_with(&self.sensing_matrix(n, s, trial), n, s, trial)
    }

    /// Runs every `(n, S, trial)` on the current rayon pool.
    pub fn run(&self) -> Result<PhaseGrid, ExperimentError> {
        let cfg = &self.config;
        let fixed: Vec<Option<DenseMatrix>> = cfg
            .n_list
            .par_iter()
            .map(|&n| (cfg.matrix_mode == MatrixMode::Fixed).then(|| self.sensing_matrix(n, 0, 0)))
            .collect();
        let tasks: Vec<(usize, usize, usize)> = (0..cfg.n_list.len())
            .flat_map(|ni| (0..cfg.s_list.len()).flat_map(move |si| (0..cfg.trials).map(move |t| (ni, si, t))))
            .collect();
        let outcomes = tasks
            .par_iter()
            .map(|&(ni, si, trial)| {
                let (n, s) = (cfg.n_list[ni], cfg.s_list[si]);
                match &fixed[ni] {
                    Some(phi) => self.run_with(phi, n, s, trial),
                    None => self.run_trial(n, s, trial),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut cells = Vec::with_capacity(cfg.n_list.len() * cfg.s_list.len());
        for (chunk, (ni, si)) in outcomes
            .chunks(cfg.trials)
            .zip((0..cfg.n_list.len()).flat_map(|ni| (0..cfg.s_list.len()).map(move |si| (ni, si))))
        {
            let successes = chunk.iter().filter(|o| o.success).count();
            let runtime = chunk.iter().map(|o| o.runtime_s).sum::<f64>() / cfg.trials as f64;
            cells.push(PhaseCell::new(
                cfg.algorithm,
                cfg.dictionary.name(),
                cfg.ensemble.name().to_string(),
                cfg.n_list[ni],
                cfg.s_list[si],
                cfg.trials,
                successes,
                runtime,
            ));
        }
        Ok(PhaseGrid {
            digest: Some(cfg.digest()),
            cells,
        })
    }
}

/// Success of trial `trial` in cell `(n, S)`; recovery errors count as failures.
pub fn run_cell(config: &ExperimentConfig, n: usize, s: usize, trial: usize) -> Result<bool, ExperimentError> {
    Ok(Experiment::new(config.clone())?.run_trial(n, s, trial)?.success)
}

/// All cells of the config on rayon's global pool.
pub fn run_phase_transition(config: &ExperimentConfig) -> Result<PhaseGrid, ExperimentError> {
    Experiment::new(config.clone())?.run()
}

/// As [`run_phase_transition`] on a dedicated pool of `workers` threads.
pub fn run_phase_transition_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<PhaseGrid, ExperimentError> {
    let experiment = Experiment::new(config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    pool.install(|| experiment.run())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            d: 32,
            n_list: vec![16, 24],
            s_list: vec![1, 3, 6],
            trials: 6,
            seed: 7,
            ..ExperimentConfig::paper_default(algorithm)
        }
    }

    #[test]
    fn signal_shapes() {
        let mut rng = RngStream::new(1);
        let full = draw_sparse_signal(6, 6, CoeffModel::Gaussian, &mut rng).unwrap();
        assert_eq!(full.support(), &[0, 1, 2, 3, 4, 5]);
        let unit = draw_sparse_signal(50, 10, CoeffModel::UnitSign, &mut rng).unwrap();
        assert!(unit.coefficients().iter().all(|c| c.abs() == 1.0));
        assert!(draw_sparse_signal(5, 0, CoeffModel::Gaussian, &mut rng).is_err());
        assert!(draw_sparse_signal(5, 6, CoeffModel::Gaussian, &mut rng).is_err());
    }

    #[test]
    fn support_is_uniform() {
        let mut rng = RngStream::new(2);
        let draws = 10_000;
        let mut counts = [0usize; 16];
        for _ in 0..draws {
            for &i in draw_sparse_signal(16, 2, CoeffModel::Gaussian, &mut rng).unwrap().support() {
                counts[i] += 1;
            }
        }
        let p = 2.0 / 16.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn dirac_square_omp_always_succeeds() {
        let config = ExperimentConfig {
            d: 32,
            dictionary: DictionarySource::Dirac,
            n_list: vec![32],
            s_list: vec![1],
            trials: 100,
            ..small(Algorithm::Omp)
        };
        let grid = run_phase_transition(&config).unwrap();
        assert!(grid.cells[0].successes >= 99);
    }

    #[test]
    fn cell_is_deterministic() {
        let config = small(Algorithm::BasisPursuit);
        for trial in 0..3 {
            assert_eq!(
                run_cell(&config, 16, 3, trial).unwrap(),
                run_cell(&config, 16, 3, trial).unwrap()
            );
        }
    }

    #[test]
    fn oversized_support_fails() {
        let config = ExperimentConfig {
            n_list: vec![8],
            s_list: vec![12],
            trials: 10,
            ..small(Algorithm::Omp)
        };
        let grid = run_phase_transition(&config).unwrap();
        assert_eq!(grid.cells[0].successes, 0);
    }

    #[test]
    fn grid_layout_and_workers() {
        for algorithm in Algorithm::ALL {
            for mode in [MatrixMode::Fixed, MatrixMode::Fresh] {
                let config = ExperimentConfig {
                    matrix_mode: mode,
                    ..small(algorithm)
                };
                let one = run_phase_transition_with_workers(&config, 1).unwrap();
                let three = run_phase_transition_with_workers(&config, 3).unwrap();
                assert_eq!(one.without_timing(), three.without_timing());
                assert_eq!(one.cells.len(), 6);
                assert_eq!((one.cells[1].n, one.cells[1].s), (16, 3));
                for c in &one.cells {
                    assert!(c.successes <= c.trials);
                    assert_eq!(c.rate, c.successes as f64 / c.trials as f64);
                }
            }
        }
    }

    #[test]
    fn single_cell_grid() {
        let config = ExperimentConfig {
            n_list: vec![16],
            s_list: vec![2],
            trials: 1,
            ..small(Algorithm::Thresholding)
        };
        assert_eq!(run_phase_transition(&config).unwrap().cells.len(), 1);
    }

    #[test]
    fn validation() {
        let mut c = small(Algorithm::Omp);
        c.trials = 0;
        assert!(Experiment::new(c).is_err());
        let mut c = small(Algorithm::Omp);
        c.n_list = vec![129];
        assert!(Experiment::new(c).is_err());
        let mut c = small(Algorithm::Omp);
        c.s_list = vec![65];
        assert!(Experiment::new(c).is_err());
        let mut c = small(Algorithm::Omp);
        c.d = 31;
        assert!(Experiment::new(c).is_err());
    }

    #[test]
    fn digest_tracks_config() {
        let a = small(Algorithm::Omp);
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn matrices_are_shared_across_algorithms() {
        let a = Experiment::new(small(Algorithm::Omp)).unwrap();
        let b = Experiment::new(small(Algorithm::BasisPursuit)).unwrap();
        assert_eq!(a.measurement_matrix(16, 3, 2), b.measurement_matrix(16, 1, 0));
        let fresh = Experiment::new(ExperimentConfig {
            matrix_mode: MatrixMode::Fresh,
            ..small(Algorithm::Omp)
        })
        .unwrap();
        assert_ne!(fresh.measurement_matrix(16, 3, 2), fresh.measurement_matrix(16, 3, 1));
    }
}
