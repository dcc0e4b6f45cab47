//! First-order decentralized baselines: gradient-tracked distributed
//! gradient descent and the correction-based exact first-order method.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::network::{MixingMatrix, Stack};
use crate::problem::LossOracle;

use super::engine::{Engine, StepCost};
use super::state::{gradient_stack, validate_ensemble, NetworkState};

/// Distributed gradient descent with gradient tracking: one mixing round
/// per iteration, constant step along the tracked global-gradient
/// estimate.
pub struct DgdTracking {
    oracles: Vec<Arc<dyn LossOracle>>,
    w: MixingMatrix,
    ws: MixingMatrix,
    eta: f64,
    grads_at_x: Stack,
    mean_m: f64,
}

impl DgdTracking {
    pub fn new(
        oracles: Vec<Arc<dyn LossOracle>>,
        w: MixingMatrix,
        ws: MixingMatrix,
        eta: f64,
    ) -> Result<DgdTracking> {
        let (n, d) = validate_ensemble(&oracles)?;
        if w.n() != n || ws.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "mixing matrices cover {}/{} agents, ensemble has {n}",
                w.n(),
                ws.n()
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {eta}")));
        }
        let mean_m =
            oracles.iter().map(|o| o.sample_count() as f64).sum::<f64>() / oracles.len() as f64;
        Ok(DgdTracking { oracles, w, ws, eta, grads_at_x: Stack::zeros(n, d), mean_m })
    }
}

impl Engine for DgdTracking {
    fn name(&self) -> &str {
        "dgd_tracking"
    }

    fn init(&mut self, x0: &Stack) -> Result<(NetworkState, StepCost)> {
        let grads = gradient_stack(&self.oracles, x0)?;
        self.grads_at_x = grads.clone();
        let state = NetworkState { x: x0.clone(), y: x0.clone(), s: grads, t: 0 };
        Ok((state, StepCost { comm_rounds: 0, grad_units: self.mean_m }))
    }

    fn step(&mut self, state: &mut NetworkState) -> Result<StepCost> {
        let x_new = self.w.mix(&state.x)? - &state.s * self.eta;
        let grads_new = gradient_stack(&self.oracles, &x_new)?;
        let mut s_new = self.ws.mix(&state.s)?;
        s_new += &grads_new;
        s_new -= &self.grads_at_x;

        state.x = x_new.clone();
        state.y = x_new;
        state.s = s_new;
        state.t += 1;
        self.grads_at_x = grads_new;
        if !state.is_finite() {
            return Err(Error::divergence(None, format!("non-finite state at iteration {}", state.t)));
        }
        Ok(StepCost { comm_rounds: 1, grad_units: 2.0 * self.mean_m })
    }
}

/// Exact first-order method with the `(I + W)/2` correction: keeps two
/// consecutive iterates and cancels the consensus bias of plain
/// distributed gradient descent.
pub struct Extra {
    oracles: Vec<Arc<dyn LossOracle>>,
    w: MixingMatrix,
    eta: f64,
    grads_at_x: Stack,
    prev: Option<ExtraMemory>,
    mean_m: f64,
}

struct ExtraMemory {
    x_prev: Stack,
    mixed_prev: Stack,
    grads_prev: Stack,
}

impl Extra {
    pub fn new(oracles: Vec<Arc<dyn LossOracle>>, w: MixingMatrix, eta: f64) -> Result<Extra> {
        let (n, d) = validate_ensemble(&oracles)?;
        if w.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "mixing matrix covers {} agents, ensemble has {n}",
                w.n()
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {eta}")));
        }
        let mean_m =
            oracles.iter().map(|o| o.sample_count() as f64).sum::<f64>() / oracles.len() as f64;
        Ok(Extra { oracles, w, eta, grads_at_x: Stack::zeros(n, d), prev: None, mean_m })
    }
}

impl Engine for Extra {
    fn name(&self) -> &str {
        "extra"
    }

    fn init(&mut self, x0: &Stack) -> Result<(NetworkState, StepCost)> {
        let grads = gradient_stack(&self.oracles, x0)?;
        self.grads_at_x = grads.clone();
        self.prev = None;
        let state = NetworkState { x: x0.clone(), y: x0.clone(), s: grads, t: 0 };
        Ok((state, StepCost { comm_rounds: 0, grad_units: self.mean_m }))
    }

    fn step(&mut self, state: &mut NetworkState) -> Result<StepCost> {
        let mixed = self.w.mix(&state.x)?;
        let x_new = match &self.prev {
            None => &mixed - &self.grads_at_x * self.eta,
            Some(memory) => {
                &mixed + &state.x
                    - (&memory.x_prev + &memory.mixed_prev) * 0.5
                    - (&self.grads_at_x - &memory.grads_prev) * self.eta
            }
        };
        self.prev = Some(ExtraMemory {
            x_prev: state.x.clone(),
            mixed_prev: mixed,
            grads_prev: self.grads_at_x.clone(),
        });
        let grads_new = gradient_stack(&self.oracles, &x_new)?;
        self.grads_at_x = grads_new.clone();

        state.x = x_new.clone();
        state.y = x_new;
        // no tracked estimate in this scheme; expose the fresh local
        // gradients so the generic metrics stay well defined
        state.s = grads_new;
        state.t += 1;
        if !state.is_finite() {
            return Err(Error::divergence(None, format!("non-finite state at iteration {}", state.t)));
        }
        Ok(StepCost { comm_rounds: 1, grad_units: 2.0 * self.mean_m })
    }
}
