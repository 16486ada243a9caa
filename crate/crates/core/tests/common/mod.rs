#![allow(dead_code)]

use dictcs::numerics::{least_squares, norm2, DenseMatrix};

/// Supports of size `sparsity` on which `s` is fit with residual at most
/// `1e-9 ‖s‖`, by enumeration of all of them.
pub fn l0_solutions(phi: &DenseMatrix, s: &[f64], sparsity: usize) -> Vec<Vec<usize>> {
    let k = phi.cols();
    let tol = 1e-9 * norm2(s);
    let mut found = Vec::new();
    let mut support: Vec<usize> = (0..sparsity).collect();
    loop {
        let sub = phi.select_columns(&support);
        if let Ok(coef) = least_squares(&sub, s) {
            let fit = sub.mul_vec(&coef);
            let res: f64 = s.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if res <= tol {
                found.push(support.clone());
            }
        }
        // Next combination in lexicographic order.
        let mut i = sparsity;
        loop {
            if i == 0 {
                return found;
            }
            i -= 1;
            if support[i] < k - (sparsity - i) {
                support[i] += 1;
                for j in (i + 1)..sparsity {
                    support[j] = support[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// The unique sparsest support, if exactly one size-`sparsity` support fits `s`.
pub fn unique_l0_support(phi: &DenseMatrix, s: &[f64], sparsity: usize) -> Option<Vec<usize>> {
    let mut all = l0_solutions(phi, s, sparsity);
    if all.len() == 1 {
        all.pop()
    } else {
        None
    }
}

pub fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = norm2(&v);
    v.into_iter().map(|x| x / n).collect()
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|a| a.abs()).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
