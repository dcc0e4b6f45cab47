//! Gradient-tracked approximate-Newton engines (general, quadratic
//! closed-form, and proximal variants).

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::{MixingScheme, Stack};
use crate::problem::{LossOracle, Regularizer};
use crate::solvers::{fista, make_surrogate, nesterov_agd, QuadraticDaneSolver};

use super::engine::{Engine, StepCost};
use super::state::{gradient_stack, row_vector, validate_ensemble, NetworkState};

/// Inner-solve budget for the local subproblems.
#[derive(Debug, Clone, Copy)]
pub struct InnerSolve {
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl InnerSolve {
    /// Performance profile: capped iterations, loose tolerance.
    pub fn performance() -> InnerSolve {
        InnerSolve { max_iters: 100, grad_tol: 1e-6 }
    }

    /// Near-exact local minimization for rate-validation runs.
    pub fn theory() -> InnerSolve {
        InnerSolve { max_iters: 200_000, grad_tol: 1e-12 }
    }
}

fn mean_samples(oracles: &[Arc<dyn LossOracle>]) -> f64 {
    oracles.iter().map(|o| o.sample_count() as f64).sum::<f64>() / oracles.len() as f64
}

/// One outer iteration: mix the parameter estimates for `K` rounds, refresh
/// the tracked global gradient by dynamic average consensus, then let every
/// agent minimize its local surrogate around the new anchor.
pub struct NetworkDane {
    oracles: Vec<Arc<dyn LossOracle>>,
    scheme: MixingScheme,
    mu: f64,
    inner: InnerSolve,
    closed_form: Option<Vec<QuadraticDaneSolver>>,
    grads_at_y: Stack,
    mean_m: f64,
}

impl NetworkDane {
    pub fn new(
        oracles: Vec<Arc<dyn LossOracle>>,
        scheme: MixingScheme,
        mu: f64,
        inner: InnerSolve,
        closed_form: bool,
    ) -> Result<NetworkDane> {
        let (n, d) = validate_ensemble(&oracles)?;
        if scheme.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "mixing scheme covers {} agents, ensemble has {n}",
                scheme.n()
            )));
        }
        if mu < 0.0 {
            return Err(Error::InvalidConfig("regularizer must be nonnegative".into()));
        }
        let solvers = if closed_form {
            let solvers = oracles
                .iter()
                .enumerate()
                .map(|(j, o)| {
                    let h = o.hessian().ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "closed-form local solves need a quadratic oracle (agent {j})"
                        ))
                    })?;
                    QuadraticDaneSolver::new(h, mu)
                })
                .collect::<Result<Vec<_>>>()?;
            Some(solvers)
        } else {
            None
        };
        let mean_m = mean_samples(&oracles);
        Ok(NetworkDane {
            oracles,
            scheme,
            mu,
            inner,
            closed_form: solvers,
            grads_at_y: Stack::zeros(n, d),
            mean_m,
        })
    }
}

impl Engine for NetworkDane {
    fn name(&self) -> &str {
        "network_dane"
    }

    fn init(&mut self, x0: &Stack) -> Result<(NetworkState, StepCost)> {
        let grads = gradient_stack(&self.oracles, x0)?;
        self.grads_at_y = grads.clone();
        let state = NetworkState { x: x0.clone(), y: x0.clone(), s: grads, t: 0 };
        Ok((state, StepCost { comm_rounds: 0, grad_units: self.mean_m }))
    }

    fn step(&mut self, state: &mut NetworkState) -> Result<StepCost> {
        let (y_new, rounds) = self.scheme.mix_params(&state.x)?;
        let grads_new = gradient_stack(&self.oracles, &y_new)?;
        let (mut s_new, _) = self.scheme.mix_tracked(&state.s)?;
        s_new += &grads_new;
        s_new -= &self.grads_at_y;

        let mut inner_units = 0.0;
        let mut x_new = Stack::zeros(state.agents(), state.dim());
        for (j, oracle) in self.oracles.iter().enumerate() {
            let anchor = row_vector(&y_new, j);
            let tracked = row_vector(&s_new, j);
            let solution = match &self.closed_form {
                Some(solvers) => solvers[j].step(&anchor, &tracked)?,
                None => {
                    let surrogate = make_surrogate(oracle.as_ref(), &anchor, &tracked, self.mu)?;
                    let warm = row_vector(&state.x, j);
                    let report = nesterov_agd(&surrogate, &warm, self.inner.max_iters, self.inner.grad_tol)
                        .map_err(|e| match e {
                            Error::Divergence { detail, .. } => Error::Divergence { agent: Some(j), detail },
                            other => other,
                        })?;
                    inner_units += report.grad_evals as f64 * oracle.sample_count() as f64;
                    report.solution
                }
            };
            x_new.row_mut(j).copy_from(&solution.transpose());
        }

        state.x = x_new;
        state.y = y_new;
        state.s = s_new;
        state.t += 1;
        self.grads_at_y = grads_new;
        if !state.is_finite() {
            return Err(Error::divergence(None, format!("non-finite state at iteration {}", state.t)));
        }
        Ok(StepCost {
            comm_rounds: rounds as u64,
            grad_units: 2.0 * self.mean_m + inner_units / self.oracles.len() as f64,
        })
    }
}

/// The same iteration specialized to quadratic losses: tracked gradients
/// update through Hessian products and the local subproblem is solved by a
/// cached factorization. Trajectories coincide with [`NetworkDane`] up to
/// inner-solve tolerance.
pub struct QuadraticNetworkDane {
    oracles: Vec<Arc<dyn LossOracle>>,
    hessians: Vec<DMatrix<f64>>,
    solvers: Vec<QuadraticDaneSolver>,
    scheme: MixingScheme,
    mean_m: f64,
}

impl QuadraticNetworkDane {
    pub fn new(
        oracles: Vec<Arc<dyn LossOracle>>,
        scheme: MixingScheme,
        mu: f64,
    ) -> Result<QuadraticNetworkDane> {
        let (n, _) = validate_ensemble(&oracles)?;
        if scheme.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "mixing scheme covers {} agents, ensemble has {n}",
                scheme.n()
            )));
        }
        let hessians: Vec<DMatrix<f64>> = oracles
            .iter()
            .enumerate()
            .map(|(j, o)| {
                o.hessian().cloned().ok_or_else(|| {
                    Error::InvalidConfig(format!("agent {j} does not expose a constant Hessian"))
                })
            })
            .collect::<Result<_>>()?;
        let solvers = hessians
            .iter()
            .map(|h| QuadraticDaneSolver::new(h, mu))
            .collect::<Result<Vec<_>>>()?;
        let mean_m = mean_samples(&oracles);
        Ok(QuadraticNetworkDane { oracles, hessians, solvers, scheme, mean_m })
    }
}

impl Engine for QuadraticNetworkDane {
    fn name(&self) -> &str {
        "network_dane_quadratic"
    }

    fn init(&mut self, x0: &Stack) -> Result<(NetworkState, StepCost)> {
        let grads = gradient_stack(&self.oracles, x0)?;
        let state = NetworkState { x: x0.clone(), y: x0.clone(), s: grads, t: 0 };
        Ok((state, StepCost { comm_rounds: 0, grad_units: self.mean_m }))
    }

    fn step(&mut self, state: &mut NetworkState) -> Result<StepCost> {
        let (y_new, rounds) = self.scheme.mix_params(&state.x)?;
        let (mut s_new, _) = self.scheme.mix_tracked(&state.s)?;
        // gradient difference of a quadratic is a Hessian product
        for j in 0..self.hessians.len() {
            let delta = &self.hessians[j] * (row_vector(&y_new, j) - row_vector(&state.y, j));
            for c in 0..delta.len() {
                s_new[(j, c)] += delta[c];
            }
        }
        let mut x_new = Stack::zeros(state.agents(), state.dim());
        for (j, solver) in self.solvers.iter().enumerate() {
            let xj = solver.step(&row_vector(&y_new, j), &row_vector(&s_new, j))?;
            x_new.row_mut(j).copy_from(&xj.transpose());
        }
        state.x = x_new;
        state.y = y_new;
        state.s = s_new;
        state.t += 1;
        if !state.is_finite() {
            return Err(Error::divergence(None, format!("non-finite state at iteration {}", state.t)));
        }
        Ok(StepCost { comm_rounds: rounds as u64, grad_units: 2.0 * self.mean_m })
    }
}

/// Proximal variant for composite objectives: the local subproblem keeps
/// the shared nonsmooth regularizer and is solved by the accelerated
/// proximal-gradient method on the smooth surrogate.
pub struct ProxNetworkDane {
    oracles: Vec<Arc<dyn LossOracle>>,
    regularizer: Arc<dyn Regularizer>,
    scheme: MixingScheme,
    mu: f64,
    inner: InnerSolve,
    grads_at_y: Stack,
    mean_m: f64,
}

impl ProxNetworkDane {
    pub fn new(
        oracles: Vec<Arc<dyn LossOracle>>,
        regularizer: Arc<dyn Regularizer>,
        scheme: MixingScheme,
        mu: f64,
        inner: InnerSolve,
    ) -> Result<ProxNetworkDane> {
        let (n, d) = validate_ensemble(&oracles)?;
        if scheme.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "mixing scheme covers {} agents, ensemble has {n}",
                scheme.n()
            )));
        }
        if mu < 0.0 {
            return Err(Error::InvalidConfig("regularizer must be nonnegative".into()));
        }
        let mean_m = mean_samples(&oracles);
        Ok(ProxNetworkDane {
            oracles,
            regularizer,
            scheme,
            mu,
            inner,
            grads_at_y: Stack::zeros(n, d),
            mean_m,
        })
    }
}

impl Engine for ProxNetworkDane {
    fn name(&self) -> &str {
        "prox_network_dane"
    }

    fn init(&mut self, x0: &Stack) -> Result<(NetworkState, StepCost)> {
        let grads = gradient_stack(&self.oracles, x0)?;
        self.grads_at_y = grads.clone();
        let state = NetworkState { x: x0.clone(), y: x0.clone(), s: grads, t: 0 };
        Ok((state, StepCost { comm_rounds: 0, grad_units: self.mean_m }))
    }

    fn step(&mut self, state: &mut NetworkState) -> Result<StepCost> {
        let (y_new, rounds) = self.scheme.mix_params(&state.x)?;
        let grads_new = gradient_stack(&self.oracles, &y_new)?;
        let (mut s_new, _) = self.scheme.mix_tracked(&state.s)?;
        s_new += &grads_new;
        s_new -= &self.grads_at_y;

        let mut inner_units = 0.0;
        let mut x_new = Stack::zeros(state.agents(), state.dim());
        for (j, oracle) in self.oracles.iter().enumerate() {
            let anchor = row_vector(&y_new, j);
            let tracked = row_vector(&s_new, j);
            let surrogate = make_surrogate(oracle.as_ref(), &anchor, &tracked, self.mu)?;
            let warm = row_vector(&state.x, j);
            let report = fista(
                &surrogate,
                self.regularizer.as_ref(),
                &warm,
                self.inner.max_iters,
                self.inner.grad_tol,
            )
            .map_err(|e| match e {
                Error::Divergence { detail, .. } => Error::Divergence { agent: Some(j), detail },
                other => other,
            })?;
            inner_units += report.grad_evals as f64 * oracle.sample_count() as f64;
            x_new.row_mut(j).copy_from(&report.solution.transpose());
        }

        state.x = x_new;
        state.y = y_new;
        state.s = s_new;
        state.t += 1;
        self.grads_at_y = grads_new;
        if !state.is_finite() {
            return Err(Error::divergence(None, format!("non-finite state at iteration {}", state.t)));
        }
        Ok(StepCost {
            comm_rounds: rounds as u64,
            grad_units: 2.0 * self.mean_m + inner_units / self.oracles.len() as f64,
        })
    }
}
