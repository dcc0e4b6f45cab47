//! Master/slave approximate-Newton baseline: exact global averaging at
//! every iteration.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::network::Stack;
use crate::problem::LossOracle;
use crate::solvers::{make_surrogate, nesterov_agd, QuadraticDaneSolver};

use super::dane::InnerSolve;
use super::engine::{Engine, StepCost};
use super::state::{validate_ensemble, NetworkState};

/// One master/slave iteration from the shared estimate `xbar`: every agent
/// solves its local surrogate anchored at `xbar` with the exact global
/// gradient, and the master averages the solutions. Counts two
/// communication events (collect + broadcast).
pub fn dane_centralized_step(
    xbar: &DVector<f64>,
    oracles: &[Arc<dyn LossOracle>],
    mu: f64,
    inner: &InnerSolve,
    closed_form: bool,
) -> Result<DVector<f64>> {
    let (n, d) = validate_ensemble(oracles)?;
    if xbar.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {}, oracles have dimension {d}",
            xbar.len()
        )));
    }
    let mut global_grad = DVector::zeros(d);
    for oracle in oracles {
        global_grad += oracle.gradient(xbar);
    }
    global_grad /= n as f64;

    let mut mean = DVector::zeros(d);
    for (j, oracle) in oracles.iter().enumerate() {
        let solution = if closed_form {
            let h = oracle.hessian().ok_or_else(|| {
                Error::InvalidConfig(format!("closed-form step needs a quadratic oracle (agent {j})"))
            })?;
            QuadraticDaneSolver::new(h, mu)?.step(xbar, &global_grad)?
        } else {
            let surrogate = make_surrogate(oracle.as_ref(), xbar, &global_grad, mu)?;
            let report =
                nesterov_agd(&surrogate, xbar, inner.max_iters, inner.grad_tol).map_err(|e| match e {
                    Error::Divergence { detail, .. } => Error::Divergence { agent: Some(j), detail },
                    other => other,
                })?;
            report.solution
        };
        mean += solution;
    }
    Ok(mean / n as f64)
}

/// Engine wrapper keeping the master's estimate; the stacked state view
/// replicates `xbar` on every row so the shared metrics apply.
pub struct CentralizedDane {
    oracles: Vec<Arc<dyn LossOracle>>,
    mu: f64,
    inner: InnerSolve,
    closed_form: bool,
    xbar: DVector<f64>,
    mean_m: f64,
}

impl CentralizedDane {
    pub fn new(
        oracles: Vec<Arc<dyn LossOracle>>,
        mu: f64,
        inner: InnerSolve,
        closed_form: bool,
    ) -> Result<CentralizedDane> {
        let (_, d) = validate_ensemble(&oracles)?;
        if mu < 0.0 {
            return Err(Error::InvalidConfig("regularizer must be nonnegative".into()));
        }
        let mean_m =
            oracles.iter().map(|o| o.sample_count() as f64).sum::<f64>() / oracles.len() as f64;
        Ok(CentralizedDane { oracles, mu, inner, closed_form, xbar: DVector::zeros(d), mean_m })
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.xbar
    }

    fn stacked(&self) -> Result<NetworkState> {
        let n = self.oracles.len();
        let d = self.xbar.len();
        let mut x = Stack::zeros(n, d);
        let mut grad = DVector::zeros(d);
        for oracle in &self.oracles {
            grad += oracle.gradient(&self.xbar);
        }
        grad /= n as f64;
        let mut s = Stack::zeros(n, d);
        for j in 0..n {
            x.row_mut(j).copy_from(&self.xbar.transpose());
            s.row_mut(j).copy_from(&grad.transpose());
        }
        Ok(NetworkState { y: x.clone(), x, s, t: 0 })
    }
}

impl Engine for CentralizedDane {
    fn name(&self) -> &str {
        "dane_centralized"
    }

    fn init(&mut self, x0: &Stack) -> Result<(NetworkState, StepCost)> {
        // the master starts from the network average of the shared init
        self.xbar = crate::network::column_means(x0).transpose();
        let state = self.stacked()?;
        Ok((state, StepCost { comm_rounds: 0, grad_units: self.mean_m }))
    }

    fn step(&mut self, state: &mut NetworkState) -> Result<StepCost> {
        let t = state.t;
        self.xbar =
            dane_centralized_step(&self.xbar, &self.oracles, self.mu, &self.inner, self.closed_form)?;
        *state = self.stacked()?;
        state.t = t + 1;
        if !state.is_finite() {
            return Err(Error::divergence(None, format!("non-finite state at iteration {}", state.t)));
        }
        Ok(StepCost { comm_rounds: 2, grad_units: 2.0 * self.mean_m })
    }
}
