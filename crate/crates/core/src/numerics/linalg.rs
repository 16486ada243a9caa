use super::{DenseMatrix, NumericsError};

/// Relative tolerance on the diagonal of R below which a column set is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Entrywise tolerance for the symmetry check in the eigen solvers.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this
/// fraction of the input's Frobenius norm.
const JACOBI_TOLERANCE: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Householder QR factorization of a tall matrix, kept in compact form.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    m: usize,
    k: usize,
    /// Column-major; below the diagonal the Householder vectors, on and above it R.
    qr: Vec<f64>,
    /// Squared norms of the Householder vectors (0 for skipped reflections).
    vnorm2: Vec<f64>,
    rdiag: Vec<f64>,
}

impl HouseholderQr {
    pub fn new(a: &DenseMatrix) -> Result<Self, NumericsError> {
        let (m, k) = (a.rows(), a.cols());
        if m < k {
            return Err(NumericsError::RankDeficient { rank_ratio: 0.0 });
        }
        let mut qr = vec![0.0; m * k];
        for j in 0..k {
            for i in 0..m {
                qr[j * m + i] = a.get(i, j);
            }
        }
        let mut vnorm2 = vec![0.0; k];
        let mut rdiag = vec![0.0; k];
        for j in 0..k {
            let col = &mut qr[j * m..(j + 1) * m];
            let norm = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let alpha = if col[j] > 0.0 { -norm } else { norm };
            col[j] -= alpha;
            let vv = col[j..].iter().map(|v| v * v).sum::<f64>();
            vnorm2[j] = vv;
            rdiag[j] = alpha;
            let (head, tail) = qr.split_at_mut((j + 1) * m);
            let v = &head[j * m + j..(j + 1) * m];
            for c in 0..(k - j - 1) {
                let target = &mut tail[c * m + j..(c + 1) * m];
                reflect(v, vv, target);
            }
        }
        Ok(Self {
            m,
            k,
            qr,
            vnorm2,
            rdiag,
        })
    }

    /// Ratio of the smallest to the largest |R_jj|.
    pub fn rank_ratio(&self) -> f64 {
        let max = self.rdiag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        self.rdiag.iter().fold(f64::INFINITY, |a, v| a.min(v.abs())) / max
    }

    pub fn is_full_rank(&self) -> bool {
        self.k == 0 || self.rank_ratio() > RANK_TOLERANCE
    }

    /// Least-squares solution of `A x ≈ b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        assert_eq!(b.len(), self.m, "least squares: rhs length mismatch");
        if !self.is_full_rank() {
            return Err(NumericsError::RankDeficient {
                rank_ratio: self.rank_ratio(),
            });
        }
        let m = self.m;
        let mut y = b.to_vec();
        for j in 0..self.k {
            if self.vnorm2[j] > 0.0 {
                let v = &self.qr[j * m + j..(j + 1) * m];
                reflect(v, self.vnorm2[j], &mut y[j..]);
            }
        }
        let mut x = vec![0.0; self.k];
        for j in (0..self.k).rev() {
            let mut acc = y[j];
            for c in (j + 1)..self.k {
                acc -= self.qr[c * m + j] * x[c];
            }
            x[j] = acc / self.rdiag[j];
        }
        Ok(x)
    }
}

#[inline]
fn reflect(v: &[f64], vv: f64, target: &mut [f64]) {
    let proj: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let scale = 2.0 * proj / vv;
    for (t, a) in target.iter_mut().zip(v) {
        *t -= scale * a;
    }
}

/// Minimizer of ‖A x − b‖₂ via Householder QR.
///
/// Fails with `RankDeficient` when the smallest |R_jj| is not above
/// `RANK_TOLERANCE` times the largest one.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if b.len() != a.rows() {
        return Err(NumericsError::ShapeMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    HouseholderQr::new(a)?.solve(b)
}

fn check_symmetric(g: &DenseMatrix) -> Result<(), NumericsError> {
    if g.rows() != g.cols() {
        return Err(NumericsError::ShapeMismatch {
            expected: g.rows(),
            found: g.cols(),
        });
    }
    let n = g.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (g.get(i, j) - g.get(j, i)).abs();
            if gap > SYMMETRY_TOLERANCE {
                return Err(NumericsError::NotSymmetric { row: i, col: j, gap });
            }
        }
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DenseMatrix,
}

pub fn sym_eig(g: &DenseMatrix) -> Result<SymmetricEigen, NumericsError> {
    let (values, vectors) = jacobi(g, true)?;
    let vectors = vectors.expect("vectors requested");
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = vectors.select_columns(&order);
    Ok(SymmetricEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eig_extremes(g: &DenseMatrix) -> Result<(f64, f64), NumericsError> {
    if g.rows() == 0 {
        return Err(NumericsError::ShapeMismatch {
            expected: 1,
            found: 0,
        });
    }
    let (values, _) = jacobi(g, false)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

fn jacobi(g: &DenseMatrix, with_vectors: bool) -> Result<(Vec<f64>, Option<DenseMatrix>), NumericsError> {
    check_symmetric(g)?;
    let n = g.rows();
    // Work on the symmetrized copy so roundoff asymmetry in the input does not leak in.
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)));
    let mut v = with_vectors.then(|| DenseMatrix::identity(n));
    let total = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOLERANCE * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let tau = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s);
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vp = v.get(r, p);
                        let vq = v.get(r, q);
                        v.set(r, p, c * vp - s * vq);
                        v.set(r, q, s * vp + c * vq);
                    }
                }
            }
        }
    }
    let values = (0..n).map(|i| a.get(i, i)).collect();
    Ok((values, v))
}

/// Applies `A ← Jᵀ A J` for the rotation acting on coordinates (p, q).
fn rotate(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a.get(i, j).powi(2);
            }
        }
    }
    acc.sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `g`; a pivot at or below `rel_tol` times the largest diagonal entry fails.
    pub fn new(g: &DenseMatrix, rel_tol: f64) -> Result<Self, NumericsError> {
        let n = g.rows();
        let scale = (0..n).fold(0.0f64, |m, i| m.max(g.get(i, i).abs()));
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = g.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > rel_tol * scale) || d <= 0.0 {
                return Err(NumericsError::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut acc = g.get(i, j);
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                acc -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                l[i * n + j] = acc / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= self.l[i * n + k] * y[k];
            }
            y[i] = acc / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= self.l[k * n + i] * y[k];
            }
            y[i] = acc / self.l[i * n + i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, RngStream};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn least_squares_identity() {
        let a = DenseMatrix::identity(2);
        let x = least_squares(&a, &[3.0, -1.0]).unwrap();
        assert!(close(&x, &[3.0, -1.0], 1e-15));
    }

    #[test]
    fn least_squares_mean() {
        let a = DenseMatrix::new(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let x = least_squares(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_recovers_known_solution() {
        let mut rng = RngStream::new(11);
        let a = DenseMatrix::new(8, 3, rng.gaussian_vec(24)).unwrap();
        let truth = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&truth);
        let x = least_squares(&a, &b).unwrap();
        assert!(close(&x, &truth, 1e-10));
    }

    #[test]
    fn least_squares_residual_is_orthogonal() {
        let mut rng = RngStream::new(5);
        let a = DenseMatrix::new(12, 4, rng.gaussian_vec(48)).unwrap();
        let b = rng.gaussian_vec(12);
        let x = least_squares(&a, &b).unwrap();
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let scale = crate::numerics::norm2(&b);
        for j in 0..4 {
            let col = a.column(j);
            assert!(dot(&col, &r).abs() <= 1e-8 * scale * crate::numerics::norm2(&col));
        }
    }

    #[test]
    fn least_squares_rank_deficient() {
        let a = DenseMatrix::new(3, 2, vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        assert!(matches!(
            least_squares(&a, &[1.0, 1.0, 1.0]),
            Err(NumericsError::RankDeficient { .. })
        ));
        let wide = DenseMatrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        assert!(least_squares(&wide, &[1.0]).is_err());
    }

    #[test]
    fn eig_examples() {
        let (lo, hi) = sym_eig_extremes(&DenseMatrix::identity(3)).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
        let g = DenseMatrix::new(2, 2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let (lo, hi) = sym_eig_extremes(&g).unwrap();
        assert!((lo - 0.5).abs() < 1e-10 && (hi - 1.5).abs() < 1e-10);
        let d = DenseMatrix::new(3, 3, vec![0.2, 0.0, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 1.7]).unwrap();
        let (lo, hi) = sym_eig_extremes(&d).unwrap();
        assert!((lo - 0.2).abs() < 1e-15 && (hi - 1.7).abs() < 1e-15);
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let g = DenseMatrix::new(2, 2, vec![1.0, 0.5, 0.4, 1.0]).unwrap();
        assert!(matches!(sym_eig_extremes(&g), Err(NumericsError::NotSymmetric { .. })));
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let mut rng = RngStream::new(3);
        let b = DenseMatrix::new(6, 6, rng.gaussian_vec(36)).unwrap();
        let g = b.gram();
        let eig = sym_eig(&g).unwrap();
        for i in 0..6 {
            let v = eig.vectors.column(i);
            let gv = g.mul_vec(&v);
            for (x, y) in gv.iter().zip(&v) {
                assert!((x - eig.values[i] * y).abs() < 1e-9);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cholesky_solves() {
        let mut rng = RngStream::new(9);
        let b = DenseMatrix::new(7, 5, rng.gaussian_vec(35)).unwrap();
        let g = b.gram();
        let rhs = rng.gaussian_vec(5);
        let x = Cholesky::new(&g, 1e-14).unwrap().solve(&rhs);
        assert!(close(&g.mul_vec(&x), &rhs, 1e-10));
        let singular = DenseMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(Cholesky::new(&singular, 1e-12).is_err());
    }
}
