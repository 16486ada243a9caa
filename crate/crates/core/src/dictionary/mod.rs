//! Dictionaries and the quantities that control sparse recovery in them:
//! coherence, the Babel function and local/global restricted isometry constants.

mod isometry;

use std::path::Path;

use thiserror::Error;

use crate::numerics::{DenseMatrix, NumericsError};

pub use isometry::{
    binomial, local_isometry, restricted_isometry_exact, restricted_isometry_sampled, IsometryMethod,
    IsometryReport, DEFAULT_ENUMERATION_LIMIT,
};

/// Columns must have unit norm to within this.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// Loaded columns whose norm deviates from 1 by more than this get a warning.
pub const LOAD_WARNING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("column {0} is zero")]
    ZeroColumn(usize),
    #[error("column {column} has norm {norm}, expected 1")]
    NotUnitNorm { column: usize, norm: f64 },
    #[error("need at least two atoms, found {0}")]
    TooFewAtoms(usize),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("empty support")]
    EmptySupport,
    #[error("support index {index} out of range for {cols} columns")]
    InvalidSupport { index: usize, cols: usize },
    #[error("{count} supports exceed the enumeration limit {limit}")]
    CombinatorialBlowup { count: u128, limit: u128 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A `d × K` matrix with unit-norm columns (atoms).
#[derive(Debug, Clone)]
pub struct Dictionary {
    matrix: DenseMatrix,
    warnings: Vec<String>,
}

impl Dictionary {
    /// Wraps a matrix whose columns already have unit norm.
    pub fn from_matrix(matrix: DenseMatrix) -> Result<Self, DictionaryError> {
        for j in 0..matrix.cols() {
            let norm = matrix.column_norm(j);
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(DictionaryError::NotUnitNorm { column: j, norm });
            }
        }
        Ok(Self {
            matrix,
            warnings: Vec::new(),
        })
    }

    /// Scales every column to unit norm. Records a warning for each column
    /// that was off by more than [`LOAD_WARNING_TOLERANCE`].
    pub fn normalized(matrix: DenseMatrix) -> Result<Self, DictionaryError> {
        let (d, k) = (matrix.rows(), matrix.cols());
        let mut warnings = Vec::new();
        let mut norms = Vec::with_capacity(k);
        for j in 0..k {
            let norm = matrix.column_norm(j);
            if norm == 0.0 {
                return Err(DictionaryError::ZeroColumn(j));
            }
            if (norm - 1.0).abs() > LOAD_WARNING_TOLERANCE {
                warnings.push(format!("column {j} had norm {norm}; normalized"));
            }
            norms.push(norm);
        }
        let matrix = DenseMatrix::from_fn(d, k, |i, j| matrix.get(i, j) / norms[j]);
        Ok(Self { matrix, warnings })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of atoms `K`.
    pub fn atoms(&self) -> usize {
        self.matrix.cols()
    }

    pub fn atom(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Absolute Gram matrix entries `|⟨φ_i, φ_j⟩|`.
    fn abs_gram(&self) -> DenseMatrix {
        let g = self.matrix.gram();
        DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| g.get(i, j).abs())
    }
}

/// The `d × d` identity.
pub fn make_dirac(d: usize) -> Result<Dictionary, DictionaryError> {
    if d == 0 {
        return Err(DictionaryError::InvalidDimension("d must be at least 1".into()));
    }
    Ok(Dictionary {
        matrix: DenseMatrix::identity(d),
        warnings: Vec::new(),
    })
}

/// Orthonormal DCT-II basis: atom `j` has entries `c_j cos(π (2t + 1) j / (2d))`.
pub fn dct_basis(d: usize) -> DenseMatrix {
    let df = d as f64;
    DenseMatrix::from_fn(d, d, |t, j| {
        let c = if j == 0 { (1.0 / df).sqrt() } else { (2.0 / df).sqrt() };
        c * libm::cos(std::f64::consts::PI * (2 * t + 1) as f64 * j as f64 / (2.0 * df))
    })
}

/// Union of the Dirac and DCT-II bases, a `d × 2d` dictionary.
pub fn make_dirac_dct(d: usize) -> Result<Dictionary, DictionaryError> {
    if d < 2 || d % 2 != 0 {
        return Err(DictionaryError::InvalidDimension(format!(
            "Dirac-DCT needs an even d >= 2, got {d}"
        )));
    }
    let dct = dct_basis(d);
    let matrix = DenseMatrix::from_fn(d, 2 * d, |t, j| {
        if j < d {
            if t == j {
                1.0
            } else {
                0.0
            }
        } else {
            dct.get(t, j - d)
        }
    });
    Ok(Dictionary {
        matrix,
        warnings: Vec::new(),
    })
}

/// Reads a dictionary from headerless CSV: `d` rows of `K` numbers, row `t`
/// holding component `t` of every atom. Columns are normalized on load.
pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary, DictionaryError> {
    let text = std::fs::read_to_string(path)?;
    parse_dictionary(&text)
}

pub fn parse_dictionary(text: &str) -> Result<Dictionary, DictionaryError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DictionaryError::Parse(e.to_string()))?;
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(DictionaryError::Parse(format!(
                    "row {r} has {} entries, expected {c}",
                    record.len()
                )))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| DictionaryError::Parse(format!("row {r}, column {c}: {field:?}")))?;
            if !v.is_finite() {
                return Err(DictionaryError::Parse(format!("row {r}, column {c}: non-finite")));
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.filter(|&c| c > 0).ok_or_else(|| DictionaryError::Parse("empty file".into()))?;
    let matrix = DenseMatrix::new(rows, cols, data)?;
    let dict = Dictionary::normalized(matrix)?;
    for w in dict.warnings() {
        log::warn!("{w}");
    }
    Ok(dict)
}

/// Largest absolute inner product between distinct atoms.
pub fn coherence(dict: &Dictionary) -> Result<f64, DictionaryError> {
    let k = dict.atoms();
    if k < 2 {
        return Err(DictionaryError::TooFewAtoms(k));
    }
    let g = dict.abs_gram();
    let mut mu = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            mu = mu.max(g.get(i, j));
        }
    }
    Ok(mu.min(1.0))
}

/// Babel function `μ₁(k)`: the worst total absolute correlation of `k` atoms
/// with one further atom. Exact: for each atom, sum its `k` largest
/// off-diagonal correlations.
pub fn babel(dict: &Dictionary, k: usize) -> Result<f64, DictionaryError> {
    let atoms = dict.atoms();
    if atoms == 0 || k > atoms - 1 {
        return Err(DictionaryError::OutOfRange(format!(
            "babel index {k} needs 0 <= k <= K - 1 = {}",
            atoms.saturating_sub(1)
        )));
    }
    if k == 0 {
        return Ok(0.0);
    }
    Ok(babel_curve(dict, k)[k])
}

/// `μ₁(0), …, μ₁(max_k)` from one Gram computation.
pub fn babel_curve(dict: &Dictionary, max_k: usize) -> Vec<f64> {
    let atoms = dict.atoms();
    let max_k = max_k.min(atoms.saturating_sub(1));
    let g = dict.abs_gram();
    let mut curve = vec![0.0; max_k + 1];
    let mut others = Vec::with_capacity(atoms);
    for j in 0..atoms {
        others.clear();
        others.extend((0..atoms).filter(|&i| i != j).map(|i| g.get(i, j)));
        others.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut acc = 0.0;
        for (k, v) in others.iter().take(max_k).enumerate() {
            acc += v;
            curve[k + 1] = f64::max(curve[k + 1], acc);
        }
    }
    curve
}

/// Coherence-based upper bounds on `δ_S` of a dictionary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceRicBound {
    pub sparsity: usize,
    /// `μ₁(S − 1)`.
    pub babel: f64,
    /// `(S − 1) μ`, never smaller than `babel`.
    pub coherence_product: f64,
}

pub fn ric_coherence_bound(dict: &Dictionary, sparsity: usize) -> Result<CoherenceRicBound, DictionaryError> {
    if sparsity == 0 || sparsity > dict.atoms() {
        return Err(DictionaryError::OutOfRange(format!(
            "sparsity {sparsity} must be in 1..={}",
            dict.atoms()
        )));
    }
    if sparsity == 1 {
        return Ok(CoherenceRicBound {
            sparsity,
            babel: 0.0,
            coherence_product: 0.0,
        });
    }
    let mu = coherence(dict)?;
    Ok(CoherenceRicBound {
        sparsity,
        babel: babel(dict, sparsity - 1)?,
        coherence_product: (sparsity - 1) as f64 * mu,
    })
}

/// Welch-type lower bound `sqrt((K − d) / (d (K − 1)))` on the coherence of any
/// `K` unit vectors in `R^d`; only meaningful for `K > d`.
pub fn coherence_lower_bound(d: usize, k: usize) -> Result<f64, DictionaryError> {
    if d == 0 || k <= d {
        return Err(DictionaryError::OutOfRange(format!(
            "coherence lower bound needs K > d >= 1, got d = {d}, K = {k}"
        )));
    }
    let (d, k) = (d as f64, k as f64);
    Ok(((k - d) / (d * (k - 1.0))).sqrt())
}
