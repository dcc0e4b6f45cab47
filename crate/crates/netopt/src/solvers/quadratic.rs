//! Closed-form local step for quadratic losses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SpdSolver;

/// Caches the factorization of `H + μI` so the per-iteration step
/// `y − (H + μI)⁻¹ s` costs one triangular solve.
pub struct QuadraticDaneSolver {
    solver: SpdSolver,
    dim: usize,
}

impl QuadraticDaneSolver {
    pub fn new(hessian: &DMatrix<f64>, mu: f64) -> Result<Self> {
        if hessian.nrows() != hessian.ncols() {
            return Err(Error::DimensionMismatch("Hessian must be square".into()));
        }
        if mu < 0.0 {
            return Err(Error::InvalidConfig("regularizer must be nonnegative".into()));
        }
        let d = hessian.nrows();
        let shifted = hessian + DMatrix::identity(d, d) * mu;
        let solver = SpdSolver::new(shifted)
            .map_err(|_| Error::Singular("H + muI is not positive definite (sigma + mu = 0?)".into()))?;
        Ok(QuadraticDaneSolver { solver, dim: d })
    }

    /// `y − (H + μI)⁻¹ s`.
    pub fn step(&self, y: &DVector<f64>, s: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.dim || s.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vectors of length {}/{} vs factorization of dimension {}",
                y.len(),
                s.len(),
                self.dim
            )));
        }
        Ok(y - self.solver.solve(s))
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.solver.solve(rhs)
    }
}

/// One-shot convenience wrapper when no factorization reuse is needed.
pub fn quadratic_dane_step(
    hessian: &DMatrix<f64>,
    mu: f64,
    y: &DVector<f64>,
    s: &DVector<f64>,
) -> Result<DVector<f64>> {
    QuadraticDaneSolver::new(hessian, mu)?.step(y, s)
}
