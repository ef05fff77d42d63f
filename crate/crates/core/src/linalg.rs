//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of a Hermitian matrix, sorted in decreasing order.
///
/// `entries` is row-major `dim x dim`. The 2x2 case uses the closed form.
pub fn hermitian_eigenvalues(dim: usize, entries: &[Complex64]) -> Vec<f64> {
    debug_assert_eq!(entries.len(), dim * dim);
    if dim == 2 {
        let a = entries[0].re;
        let d = entries[3].re;
        let b = entries[1];
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return vec![mean + radius, mean - radius];
    }
    let m = DMatrix::from_row_slice(dim, dim, entries);
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
pub fn leading_eigenpair(dim: usize, entries: &[Complex64]) -> (f64, Vec<Complex64>) {
    let m = DMatrix::from_row_slice(dim, dim, entries);
    let eig = m.symmetric_eigen();
    let (idx, value) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty matrix");
    let vector = eig.eigenvectors.column(idx).iter().copied().collect();
    (value, vector)
}

/// Least-squares solution of a complex linear system.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Vec<Complex64>,
    /// Extreme singular values of the column-equilibrated system matrix.
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Solves `min ||A x - b||` via SVD after scaling every column of `A` to unit norm.
pub fn solve_least_squares(a: &DMatrix<Complex64>, b: &[Complex64]) -> Result<LeastSquares> {
    let (rows, cols) = a.shape();
    if rows != b.len() {
        return Err(Error::DimensionMismatch {
            expected: rows,
            actual: b.len(),
        });
    }
    if rows < cols {
        return Err(Error::InsufficientPoints {
            needed: cols,
            available: rows,
        });
    }
    let scales: Vec<f64> = (0..cols)
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let svd = scaled.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    let rhs = DVector::from_column_slice(b);
    let y = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let solution = y.iter().zip(&scales).map(|(v, s)| v / *s).collect();
    Ok(LeastSquares {
        solution,
        sigma_min,
        sigma_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closed_form_matches_general_solver() {
        let entries = [c(2.0, 0.0), c(0.5, -1.0), c(0.5, 1.0), c(-1.0, 0.0)];
        let closed = hermitian_eigenvalues(2, &entries);
        let m = DMatrix::from_row_slice(2, 2, &entries);
        let mut general: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        general.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in closed.iter().zip(&general) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn leading_eigenpair_of_rank_one() {
        let v = [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
        let entries: Vec<Complex64> = (0..9).map(|i| v[i / 3] * v[i % 3].conj()).collect();
        let (value, u) = leading_eigenpair(3, &entries);
        assert!((value - 1.0).abs() < 1e-12);
        let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        let values = hermitian_eigenvalues(3, &entries);
        assert!((values[0] - 1.0).abs() < 1e-12 && values[1].abs() < 1e-12);
    }

    #[test]
    fn least_squares_recovers_consistent_system() {
        let a = DMatrix::from_fn(5, 3, |r, j| c((r + 1) as f64, j as f64).powu(j as u32 + 1));
        let x = [c(1.0, -1.0), c(0.5, 0.25), c(-2.0, 0.0)];
        let b: Vec<Complex64> = (0..5).map(|r| (0..3).map(|j| a[(r, j)] * x[j]).sum()).collect();
        let ls = solve_least_squares(&a, &b).unwrap();
        for (got, want) in ls.solution.iter().zip(&x) {
            assert!((got - want).norm() < 1e-10);
        }
        assert!(ls.sigma_min > 0.0 && ls.sigma_min <= ls.sigma_max);
    }

    #[test]
    fn least_squares_rejects_underdetermined() {
        let a = DMatrix::from_element(2, 3, c(1.0, 0.0));
        assert!(matches!(
            solve_least_squares(&a, &[c(1.0, 0.0); 2]),
            Err(Error::InsufficientPoints { .. })
        ));
    }
}
