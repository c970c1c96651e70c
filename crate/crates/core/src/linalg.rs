//! Small dense linear-algebra helpers over complex matrices.
//!
//! Everything here wraps nalgebra; the wrappers fix deterministic
//! conventions (descending eigenvalue order, relative rank thresholds) that
//! the rest of the crate relies on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub struct HermitianEigen {
    /// Real eigenvalues, largest first.
    pub values: Vec<f64>,
    /// Matching eigenvectors as columns.
    pub vectors: DMatrix<Complex64>,
}

/// Eigendecomposition of (m + m†)/2.  The symmetrization guards against
/// last-bit asymmetry from accumulated arithmetic; callers pass matrices
/// that are Hermitian up to numerical noise.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> HermitianEigen {
    let n = m.nrows();
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    sv
}

/// Numerical rank: number of singular values above `tol` relative to the
/// largest one (absolute `tol` when the matrix is numerically zero).
pub fn numerical_rank(m: &DMatrix<Complex64>, tol: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= tol {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Minimum-norm least-squares solution of  A x = b  via SVD.
/// Returns (solution, residual 2-norm).
pub fn lstsq(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<(DVector<Complex64>, f64)> {
    if a.nrows() != b.len() {
        return Err(Error::Invalid(format!(
            "lstsq shape mismatch: {}x{} vs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 1e-13)
        .map_err(|e| Error::Invalid(format!("svd solve failed: {e}")))?;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

/// Orthonormal basis (columns) for the column span of `m`, rank decided by
/// the relative threshold `tol`.
pub fn column_span_basis(m: &DMatrix<Complex64>, tol: f64) -> DMatrix<Complex64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    // nalgebra's SVD does not guarantee ordering; select columns of u whose
    // singular value passes the cut, in descending order.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite")
    });
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > tol * top)
        .collect();
    let mut out = DMatrix::zeros(m.nrows(), kept.len());
    for (c, &i) in kept.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Max-abs entry of a matrix (for unitarity and agreement checks).
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_eigen_recovers_a_known_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        );
        let eig = hermitian_eigen(&m);
        assert_abs_diff_eq!(eig.values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-12);
        // Reconstruction: V diag(λ) V† = M.
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(
            eig.values.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>(),
        ));
        let rec = &eig.vectors * lambda * eig.vectors.adjoint();
        assert_abs_diff_eq!(max_abs(&(rec - m)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_thresholds_are_relative() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(1e6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-6, 0.0)],
        );
        // 1e-6 / 1e6 = 1e-12 relative: below a 1e-10 cut.
        assert_eq!(numerical_rank(&m, 1e-10), 1);
        assert_eq!(numerical_rank(&m, 1e-14), 2);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 2), 1e-10), 0);
    }

    #[test]
    fn lstsq_solves_consistent_systems() {
        let a = DMatrix::from_row_slice(
            3,
            2,
            &[
                c(1.0, 0.0),
                c(0.0, 1.0),
                c(2.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(1.0, -1.0),
            ],
        );
        let x_true = DVector::from_vec(vec![c(0.5, 0.5), c(-1.0, 0.25)]);
        let b = &a * &x_true;
        let (x, residual) = lstsq(&a, &b).unwrap();
        assert_abs_diff_eq!((x - x_true).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(residual, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn span_basis_is_orthonormal() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0),
                c(0.0, 1.0), c(0.0, 2.0), c(0.0, 3.0),
                c(1.0, 1.0), c(2.0, 2.0), c(3.0, 3.0),
            ],
        );
        // All columns proportional: rank 1.
        let q = column_span_basis(&m, 1e-10);
        assert_eq!(q.ncols(), 1);
        let gram = q.adjoint() * &q;
        assert_abs_diff_eq!(max_abs(&(gram - DMatrix::identity(1, 1))), 0.0, epsilon = 1e-12);
    }
}
