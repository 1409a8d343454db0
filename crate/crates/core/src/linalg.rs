//! Small dense linear algebra: exact rank over Q and SVD-based float tests.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::poly::Rational;

/// Rank of a rational matrix given as rows, by Gaussian elimination.
pub fn exact_rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let pivot = m[rank][col].clone();
        for r in (rank + 1)..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..ncols {
                let delta = &factor * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Exact test of `target in span(rows)`.
pub fn exact_in_span(rows: &[Vec<Rational>], target: &[Rational]) -> bool {
    let base = exact_rank(rows);
    let mut ext = rows.to_vec();
    ext.push(target.to_vec());
    exact_rank(&ext) == base
}

/// Inverse of a square rational matrix, `None` if singular.
pub fn exact_inverse(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    Rational::from_integer(1.into())
                } else {
                    Rational::zero()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for c in 0..2 * n {
            m[col][c] = &m[col][c] / &p;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in 0..2 * n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c])
}

/// Singular values in descending order.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() || rows[0].is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_matrix(rows).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Ratio of the `k`-th largest singular value to the largest, where `k` is
/// the number of rows (full row rank test). Zero if the matrix is zero.
pub fn row_rank_ratio(rows: &[Vec<f64>]) -> f64 {
    let s = singular_values(rows);
    if s.len() < rows.len() || s.is_empty() || s[0] == 0.0 {
        return 0.0;
    }
    s[rows.len() - 1] / s[0]
}

/// Numerical rank with relative threshold `rel_tol` on singular values.
pub fn numerical_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let s = singular_values(rows);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// Least-squares residual `min_c |sum_i c_i rows[i] - target|`, relative to
/// `|target|`.
pub fn span_residual(rows: &[Vec<f64>], target: &[f64]) -> f64 {
    let tn = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rows.is_empty() {
        return if tn == 0.0 { 0.0 } else { 1.0 };
    }
    let g = to_matrix(rows).transpose();
    let b = DVector::from_column_slice(target);
    let svd = g.clone().svd(true, true);
    let top = svd.singular_values.max();
    let eps = if top > 0.0 { top * 1e-12 } else { 0.0 };
    let coef = match svd.solve(&b, eps) {
        Ok(c) => c,
        Err(_) => return 1.0,
    };
    let r = &g * coef - b;
    if tn == 0.0 {
        r.norm()
    } else {
        r.norm() / tn
    }
}

/// Minimum-norm least-squares solution of `jac * dx = rhs`.
pub fn min_norm_solve(jac: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    if jac.is_empty() {
        return None;
    }
    let a = to_matrix(jac);
    let svd = a.svd(true, true);
    let top = svd.singular_values.max();
    if !(top > 0.0) {
        return None;
    }
    let b = DVector::from_column_slice(rhs);
    svd.solve(&b, top * 1e-13).ok().map(|v| v.iter().copied().collect())
}
