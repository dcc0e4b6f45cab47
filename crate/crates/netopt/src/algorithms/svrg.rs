//! Variance-reduced local computation behind the same tracked mixing
//! skeleton: the local subproblem solve is replaced by S stochastic steps
//! whose estimator is corrected by the tracked global gradient.

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::{MixingScheme, Stack};
use crate::problem::{substream, LossOracle};

use super::engine::{Engine, StepCost};
use super::state::{gradient_stack, row_vector, validate_ensemble, NetworkState};

/// Which stochastic-gradient correction the inner loop uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrEstimator {
    /// Anchored at the loop start: `v = ∇ℓ(u; z) − ∇ℓ(u⁰; z) + v⁰`.
    Svrg,
    /// Recursive: `v = ∇ℓ(u; z) − ∇ℓ(u_prev; z) + v_prev`.
    Sarah,
}

/// How the new local estimate is chosen from the inner iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputRule {
    LastIterate,
    RandomIterate,
}

pub struct NetworkVr {
    oracles: Vec<Arc<dyn LossOracle>>,
    scheme: MixingScheme,
    step_size: f64,
    loop_len: usize,
    estimator: VrEstimator,
    output: OutputRule,
    rngs: Vec<ChaCha8Rng>,
    grads_at_y: Stack,
    mean_m: f64,
    name: &'static str,
}

impl NetworkVr {
    /// `seed` drives the per-agent sampling streams; each agent gets an
    /// independent sub-stream so execution order cannot change the draw
    /// sequence.
    pub fn new(
        oracles: Vec<Arc<dyn LossOracle>>,
        scheme: MixingScheme,
        step_size: f64,
        loop_len: usize,
        estimator: VrEstimator,
        output: OutputRule,
        seed: u64,
    ) -> Result<NetworkVr> {
        let (n, d) = validate_ensemble(&oracles)?;
        if scheme.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "mixing scheme covers {} agents, ensemble has {n}",
                scheme.n()
            )));
        }
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {step_size}")));
        }
        if loop_len == 0 {
            return Err(Error::InvalidConfig("inner loop length must be at least 1".into()));
        }
        for (j, o) in oracles.iter().enumerate() {
            if o.sample_count() == 0 {
                return Err(Error::InvalidConfig(format!("agent {j} has no samples to draw from")));
            }
        }
        let rngs = (0..n).map(|j| substream(seed, j as u64 + 1)).collect();
        let mean_m =
            oracles.iter().map(|o| o.sample_count() as f64).sum::<f64>() / oracles.len() as f64;
        let name = match estimator {
            VrEstimator::Svrg => "network_svrg",
            VrEstimator::Sarah => "network_sarah",
        };
        Ok(NetworkVr {
            oracles,
            scheme,
            step_size,
            loop_len,
            estimator,
            output,
            rngs,
            grads_at_y: Stack::zeros(n, d),
            mean_m,
            name,
        })
    }
}

impl Engine for NetworkVr {
    fn name(&self) -> &str {
        self.name
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

        let mut x_new = Stack::zeros(state.agents(), state.dim());
        for (j, oracle) in self.oracles.iter().enumerate() {
            let m = oracle.sample_count();
            let anchor: DVector<f64> = row_vector(&y_new, j);
            let v0: DVector<f64> = row_vector(&s_new, j);
            let mut u = anchor.clone();
            let mut v = v0.clone();
            let mut iterates: Vec<DVector<f64>> = Vec::new();
            for _ in 0..self.loop_len {
                let u_next = &u - &v * self.step_size;
                let z = self.rngs[j].gen_range(0..m);
                v = match self.estimator {
                    VrEstimator::Svrg => {
                        oracle.sample_gradient(&u_next, z) - oracle.sample_gradient(&anchor, z) + &v0
                    }
                    VrEstimator::Sarah => {
                        oracle.sample_gradient(&u_next, z) - oracle.sample_gradient(&u, z) + &v
                    }
                };
                u = u_next;
                if matches!(self.output, OutputRule::RandomIterate) {
                    iterates.push(u.clone());
                }
            }
            let chosen = match self.output {
                OutputRule::LastIterate => u,
                OutputRule::RandomIterate => {
                    let pick = self.rngs[j].gen_range(0..iterates.len());
                    iterates.swap_remove(pick)
                }
            };
            if !linalg::all_finite(chosen.iter().copied()) {
                return Err(Error::divergence(
                    Some(j),
                    format!("non-finite inner iterate at iteration {}", state.t + 1),
                ));
            }
            x_new.row_mut(j).copy_from(&chosen.transpose());
        }

        state.x = x_new;
        state.y = y_new;
        state.s = s_new;
        state.t += 1;
        self.grads_at_y = grads_new;
        Ok(StepCost {
            comm_rounds: rounds as u64,
            grad_units: 2.0 * self.mean_m + self.loop_len as f64,
        })
    }
}
