//! Small dense helpers for symmetric matrices.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// `min_i (m_ii - sum_{j != i} |m_ij|)`; nonnegative iff `m` is diagonally dominant
/// with nonnegative diagonal.
pub fn dd_margin(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| {
            let off: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the comparison matrix (`|m_ii|` on the diagonal,
/// `-|m_ij|` off it), or the most negative diagonal entry if that is smaller.
///
/// A symmetric matrix with nonnegative diagonal is scaled diagonally dominant
/// exactly when its comparison matrix is positive semidefinite, so this is a
/// Q-only sdd margin.
pub fn sdd_margin(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let neg_diag = (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min);
    let cmp = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            m[(i, i)].abs()
        } else {
            -m[(i, j)].abs()
        }
    });
    min_eigenvalue(&cmp).min(neg_diag)
}

/// Exact positive-semidefiniteness test for a symmetric rational matrix by
/// pivoted symmetric elimination.
pub fn is_psd_exact(m: &[Vec<BigRational>]) -> bool {
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut active: Vec<usize> = (0..a.len()).collect();
    while !active.is_empty() {
        if active.iter().any(|&i| a[i][i].is_negative()) {
            return false;
        }
        match active.iter().position(|&i| a[i][i].is_positive()) {
            None => {
                // All remaining diagonal entries vanish: psd only if the block is zero.
                return active
                    .iter()
                    .all(|&i| active.iter().all(|&j| a[i][j].is_zero()));
            }
            Some(pos) => {
                let p = active.remove(pos);
                let pivot = a[p][p].clone();
                for &i in &active {
                    if a[i][p].is_zero() {
                        continue;
                    }
                    let f = &a[i][p] / &pivot;
                    for &j in &active {
                        let delta = &f * &a[p][j];
                        a[i][j] -= delta;
                    }
                }
            }
        }
    }
    true
}
