//! FISTA for composite objectives `f + g` with an exact prox for `g`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{Regularizer, SmoothObjective};
use crate::solvers::nesterov::SolverReport;

/// Accelerated proximal gradient with step `1/L` and the
/// `t_{k+1} = (1 + √(1 + 4t_k²))/2` momentum sequence. Stops when the
/// proximal-gradient mapping `‖y − prox_{τg}(y − τ∇f(y))‖/τ` falls below
/// `tol`.
pub fn fista(
    smooth: &dyn SmoothObjective,
    reg: &dyn Regularizer,
    x0: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<SolverReport> {
    if x0.len() != smooth.dim() {
        return Err(Error::DimensionMismatch(format!(
            "start point has length {}, objective dimension is {}",
            x0.len(),
            smooth.dim()
        )));
    }
    let l = smooth.smoothness();
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidConfig(format!("smoothness constant must be positive, got {l}")));
    }
    let step = 1.0 / l;

    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut t = 1.0f64;
    let mut grad_evals = 0usize;

    for iter in 0..=max_iters {
        let gy = smooth.gradient(&y);
        grad_evals += 1;
        let x_next = reg.prox(&(&y - &gy * step), step);
        if !linalg::all_finite(x_next.iter().copied()) {
            return Err(Error::divergence(None, format!("non-finite iterate at iteration {iter}")));
        }
        let mapping = (&y - &x_next).norm() / step;
        if mapping <= tol {
            return Ok(SolverReport {
                solution: x_next,
                iterations: iter,
                residual_norm: mapping,
                converged: true,
                grad_evals,
            });
        }
        if iter == max_iters {
            return Ok(SolverReport {
                solution: x_next,
                iterations: iter,
                residual_norm: mapping,
                converged: false,
                grad_evals,
            });
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
    }
    unreachable!("loop returns on the max_iters pass");
}
