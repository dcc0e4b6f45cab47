//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("non-finite eigenvalue"));
    DVector::from_vec(ev)
}

/// Spectral norm (largest singular value). Uses the symmetric
/// eigendecomposition directly when the matrix is symmetric, and the
/// eigendecomposition of `MᵀM` otherwise.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if is_symmetric(m, 1e-13) {
        m.clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    } else {
        let gram = m.transpose() * m;
        gram.symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.max(0.0)))
            .sqrt()
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Cholesky factorization of a symmetric positive definite matrix, reusable
/// across many right-hand sides.
pub struct SpdSolver {
    chol: Cholesky<f64, Dyn>,
}

impl SpdSolver {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(m)
            .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
        Ok(SpdSolver { chol })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

pub fn all_finite(it: impl IntoIterator<Item = f64>) -> bool {
    it.into_iter().all(f64::is_finite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_symmetric_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        // eigenvalues 0 and 0.5
        assert!((spectral_norm(&m) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_asymmetric_matches_singular_value() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert!((spectral_norm(&m) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spd_solver_round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let solver = SpdSolver::new(m.clone()).unwrap();
        let x = DVector::from_row_slice(&[1.0, -2.0]);
        let sol = solver.solve(&(&m * &x));
        assert!((sol - x).norm() < 1e-12);
    }

    #[test]
    fn spd_solver_rejects_singular() {
        let m = DMatrix::zeros(2, 2);
        assert!(SpdSolver::new(m).is_err());
    }
}
