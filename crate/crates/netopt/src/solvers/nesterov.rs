//! Nesterov's accelerated gradient method for strongly convex objectives.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::SmoothObjective;

/// Where an inner solve ended up.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: DVector<f64>,
    pub iterations: usize,
    /// Norm of the stopping residual at the solution (gradient norm for
    /// smooth solves, proximal-gradient mapping norm for composite ones).
    pub residual_norm: f64,
    pub converged: bool,
    /// Gradient evaluations actually performed, for compute accounting.
    pub grad_evals: usize,
}

/// Constant-momentum scheme for σ-strongly convex, L-smooth objectives:
/// step `1/L`, momentum `(√κ − 1)/(√κ + 1)`. Stops when the gradient norm
/// at the iterate reaches `grad_tol` or after `max_iters` steps.
pub fn nesterov_agd(
    obj: &dyn SmoothObjective,
    x0: &DVector<f64>,
    max_iters: usize,
    grad_tol: f64,
) -> Result<SolverReport> {
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch(format!(
            "start point has length {}, objective dimension is {}",
            x0.len(),
            obj.dim()
        )));
    }
    let l = obj.smoothness();
    let sigma = obj.strong_convexity();
    if !(l > 0.0 && sigma > 0.0 && sigma <= l) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < sigma <= L, got sigma = {sigma}, L = {l}"
        )));
    }
    let kappa = l / sigma;
    let momentum = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    let step = 1.0 / l;

    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    let mut grad_evals = 0usize;

    for iter in 0..=max_iters {
        let g = obj.gradient(&x);
        grad_evals += 1;
        let gnorm = g.norm();
        if !gnorm.is_finite() {
            return Err(Error::divergence(None, format!("non-finite gradient at iteration {iter}")));
        }
        if gnorm <= grad_tol {
            return Ok(SolverReport {
                solution: x,
                iterations: iter,
                residual_norm: gnorm,
                converged: true,
                grad_evals,
            });
        }
        if iter == max_iters {
            return Ok(SolverReport {
                solution: x,
                iterations: iter,
                residual_norm: gnorm,
                converged: false,
                grad_evals,
            });
        }
        let y = &x + (&x - &x_prev) * momentum;
        let gy = obj.gradient(&y);
        grad_evals += 1;
        let x_next = y - gy * step;
        if !linalg::all_finite(x_next.iter().copied()) {
            return Err(Error::divergence(None, format!("non-finite iterate at iteration {iter}")));
        }
        x_prev = x;
        x = x_next;
    }
    unreachable!("loop returns on the max_iters pass");
}
