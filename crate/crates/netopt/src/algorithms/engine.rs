//! The engine interface every iteration scheme implements.

use crate::error::Result;
use crate::network::Stack;

use super::state::NetworkState;

/// Resources consumed by one engine call, in the units the traces report:
/// network-wide neighbor exchanges and per-agent-average sample-gradient
/// evaluations (one full local gradient costs `m` units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCost {
    pub comm_rounds: u64,
    pub grad_units: f64,
}

impl StepCost {
    pub fn zero() -> StepCost {
        StepCost { comm_rounds: 0, grad_units: 0.0 }
    }
}

/// A networked iteration scheme. `init` builds the starting state from the
/// shared initial stack (computing whatever gradient caches the scheme
/// needs); `step` advances the state by one outer iteration.
pub trait Engine {
    fn name(&self) -> &str;

    fn init(&mut self, x0: &Stack) -> Result<(NetworkState, StepCost)>;

    fn step(&mut self, state: &mut NetworkState) -> Result<StepCost>;
}
