use std::collections::BTreeMap;
use std::path::Path;

use super::ExperimentError;
use crate::recovery::Algorithm;

pub const CSV_HEADER: [&str; 9] = [
    "algorithm",
    "dictionary",
    "ensemble",
    "n",
    "S",
    "trials",
    "successes",
    "rate",
    "mean_runtime_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell {
    pub algorithm: Algorithm,
    pub dictionary: String,
    pub ensemble: String,
    pub n: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    /// `successes / trials`.
    pub rate: f64,
    pub mean_runtime_s: f64,
}

impl PhaseCell {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        algorithm: Algorithm,
        dictionary: String,
        ensemble: String,
        n: usize,
        s: usize,
        trials: usize,
        successes: usize,
        mean_runtime_s: f64,
    ) -> Self {
        Self {
            algorithm,
            dictionary,
            ensemble,
            n,
            s,
            trials,
            successes,
            rate: successes as f64 / trials as f64,
            mean_runtime_s,
        }
    }

    /// Binomial standard error `√(p(1 − p)/trials)`.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseGrid {
    /// Digest of the generating config; not stored in the CSV.
    pub digest: Option<String>,
    pub cells: Vec<PhaseCell>,
}

impl PhaseGrid {
    pub fn cell(&self, n: usize, s: usize) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.n == n && c.s == s)
    }

    /// Distinct `n` values in first-appearance order.
    pub fn n_values(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.n) {
                out.push(c.n);
            }
        }
        out
    }

    pub fn s_values(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.s) {
                out.push(c.s);
            }
        }
        out
    }

    /// The grid with every runtime set to zero, for comparisons across runs.
    pub fn without_timing(&self) -> Self {
        let mut g = self.clone();
        g.cells.iter_mut().for_each(|c| c.mean_runtime_s = 0.0);
        g
    }
}

/// `v` with 17 significant digits in positional notation.
pub fn format_rate(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.16}");
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn grid_to_csv(grid: &PhaseGrid) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for c in &grid.cells {
        let fields = [
            c.algorithm.name().to_string(),
            c.dictionary.clone(),
            c.ensemble.clone(),
            c.n.to_string(),
            c.s.to_string(),
            c.trials.to_string(),
            c.successes.to_string(),
            format_rate(c.rate),
            format!("{:?}", c.mean_runtime_s),
        ];
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&fields).expect("in-memory write");
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
    }
    out
}

pub fn export_csv(grid: &PhaseGrid, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    std::fs::write(path, grid_to_csv(grid))?;
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: usize) -> Result<T, ExperimentError> {
    record[i]
        .parse()
        .map_err(|_| ExperimentError::Csv(format!("line {line}: cannot parse {} = {:?}", CSV_HEADER[i], &record[i])))
}

pub fn parse_csv(text: &str) -> Result<PhaseGrid, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ExperimentError::Csv(format!("unexpected header {header:?}")));
    }
    let mut cells = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let algorithm = Algorithm::from_name(&record[0])
            .ok_or_else(|| ExperimentError::Csv(format!("line {line}: unknown algorithm {:?}", &record[0])))?;
        let trials: usize = field(&record, 5, line)?;
        let successes: usize = field(&record, 6, line)?;
        let rate: f64 = field(&record, 7, line)?;
        if trials == 0 || successes > trials || rate != successes as f64 / trials as f64 {
            return Err(ExperimentError::Csv(format!("line {line}: inconsistent trials/successes/rate")));
        }
        cells.push(PhaseCell {
            algorithm,
            dictionary: record[1].to_string(),
            ensemble: record[2].to_string(),
            n: field(&record, 3, line)?,
            s: field(&record, 4, line)?,
            trials,
            successes,
            rate,
            mean_runtime_s: field(&record, 8, line)?,
        });
    }
    Ok(PhaseGrid { digest: None, cells })
}

pub fn import_csv(path: impl AsRef<Path>) -> Result<PhaseGrid, ExperimentError> {
    parse_csv(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDifference {
    pub n: usize,
    pub s: usize,
    pub rate_a: f64,
    pub rate_b: f64,
    /// `rate_a − rate_b`.
    pub difference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Equal,
    ADominates,
    BDominates,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridComparison {
    pub cells: Vec<CellDifference>,
    pub dominance: Dominance,
    /// Fraction of cells with `rate_a ≥ rate_b`.
    pub fraction_a_at_least_b: f64,
}

/// Per-cell rate differences between grids over the same `(n, S)` cells.
pub fn compare_grids(a: &PhaseGrid, b: &PhaseGrid) -> Result<GridComparison, ExperimentError> {
    let index = |g: &PhaseGrid| -> Result<BTreeMap<(usize, usize), f64>, ExperimentError> {
        let mut m = BTreeMap::new();
        for c in &g.cells {
            if m.insert((c.n, c.s), c.rate).is_some() {
                return Err(ExperimentError::CellMismatch(format!("duplicate cell n = {}, S = {}", c.n, c.s)));
            }
        }
        Ok(m)
    };
    let (ia, ib) = (index(a)?, index(b)?);
    if ia.keys().ne(ib.keys()) {
        let only_a: Vec<_> = ia.keys().filter(|k| !ib.contains_key(k)).collect();
        let only_b: Vec<_> = ib.keys().filter(|k| !ia.contains_key(k)).collect();
        return Err(ExperimentError::CellMismatch(format!(
            "(n, S) only in first: {only_a:?}; only in second: {only_b:?}"
        )));
    }
    let cells: Vec<CellDifference> = ia
        .iter()
        .map(|(&(n, s), &rate_a)| {
            let rate_b = ib[&(n, s)];
            CellDifference {
                n,
                s,
                rate_a,
                rate_b,
                difference: rate_a - rate_b,
            }
        })
        .collect();
    let ge = cells.iter().filter(|c| c.difference >= 0.0).count();
    let le = cells.iter().filter(|c| c.difference <= 0.0).count();
    let dominance = match (ge == cells.len(), le == cells.len()) {
        (true, true) => Dominance::Equal,
        (true, false) => Dominance::ADominates,
        (false, true) => Dominance::BDominates,
        (false, false) => Dominance::Mixed,
    };
    let fraction_a_at_least_b = if cells.is_empty() {
        1.0
    } else {
        ge as f64 / cells.len() as f64
    };
    Ok(GridComparison {
        cells,
        dominance,
        fraction_a_at_least_b,
    })
}
