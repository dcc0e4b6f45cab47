//! Shared iterate state, the averaged global objective, and error metrics.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::{column_means, consensus_error, Stack};
use crate::problem::{LossOracle, SmoothObjective};

/// Stacked iterates of a networked run: per-agent parameter estimates `x`,
/// locally averaged anchors `y`, and tracked global-gradient estimates `s`.
/// At initialization `y = x` and each `s` row holds the agent's local
/// gradient at `y`; every tracked engine preserves the column-sum identity
/// between `s` and the local gradients at `y` afterwards.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub x: Stack,
    pub y: Stack,
    pub s: Stack,
    pub t: usize,
}

impl NetworkState {
    pub fn agents(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x_mean(&self) -> DVector<f64> {
        column_means(&self.x).transpose()
    }

    pub fn y_mean(&self) -> DVector<f64> {
        column_means(&self.y).transpose()
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite(self.x.iter().copied())
            && linalg::all_finite(self.y.iter().copied())
            && linalg::all_finite(self.s.iter().copied())
    }
}

/// The global objective `f = (1/n) Σ_j f_j` evaluated by averaging the
/// agents' oracles.
pub struct AveragedObjective {
    oracles: Vec<Arc<dyn LossOracle>>,
    dim: usize,
}

impl AveragedObjective {
    pub fn new(oracles: &[Arc<dyn LossOracle>]) -> Result<AveragedObjective> {
        let (_, dim) = validate_ensemble(oracles)?;
        Ok(AveragedObjective { oracles: oracles.to_vec(), dim })
    }

    pub fn agents(&self) -> usize {
        self.oracles.len()
    }
}

impl SmoothObjective for AveragedObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.oracles.iter().map(|o| o.value(x)).sum::<f64>() / self.oracles.len() as f64
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for o in &self.oracles {
            g += o.gradient(x);
        }
        g / self.oracles.len() as f64
    }

    fn strong_convexity(&self) -> f64 {
        self.oracles.iter().map(|o| o.strong_convexity()).fold(f64::INFINITY, f64::min)
    }

    fn smoothness(&self) -> f64 {
        self.oracles.iter().map(|o| o.smoothness()).fold(0.0, f64::max)
    }
}

/// Checks agreement of oracle dimensions and returns `(agents, dim)`.
pub fn validate_ensemble(oracles: &[Arc<dyn LossOracle>]) -> Result<(usize, usize)> {
    if oracles.is_empty() {
        return Err(Error::InvalidConfig("no oracles supplied".into()));
    }
    let dim = oracles[0].dim();
    for (j, o) in oracles.iter().enumerate() {
        if o.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "oracle {j} has dimension {}, expected {dim}",
                o.dim()
            )));
        }
    }
    Ok((oracles.len(), dim))
}

/// Local gradients stacked rowwise: row `j` is `∇f_j` at row `j` of `v`.
pub fn gradient_stack(oracles: &[Arc<dyn LossOracle>], v: &Stack) -> Result<Stack> {
    if v.nrows() != oracles.len() {
        return Err(Error::DimensionMismatch(format!(
            "stack has {} rows for {} oracles",
            v.nrows(),
            oracles.len()
        )));
    }
    let mut out = Stack::zeros(v.nrows(), v.ncols());
    for (j, oracle) in oracles.iter().enumerate() {
        let g = oracle.gradient(&row_vector(v, j));
        out.row_mut(j).copy_from(&g.transpose());
    }
    Ok(out)
}

pub fn row_vector(v: &Stack, j: usize) -> DVector<f64> {
    v.row(j).transpose()
}

/// The three tracked error components of a networked run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorVector {
    /// `√n · ‖ȳ − y*‖`: distance of the network average from the optimum.
    pub convergence: f64,
    /// `‖y − 1⊗ȳ‖`: disagreement among agents.
    pub consensus: f64,
    /// `L⁻¹ · ‖s − ∇f(y)‖` with the global gradient evaluated at each
    /// agent's own anchor.
    pub gradient: f64,
}

impl ErrorVector {
    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_row_slice(&[self.convergence, self.consensus, self.gradient])
    }

    pub fn max_component(&self) -> f64 {
        self.convergence.max(self.consensus).max(self.gradient)
    }
}

/// Measures the error vector of a state against the reference minimizer.
pub fn error_vector(
    state: &NetworkState,
    minimizer: &DVector<f64>,
    smoothness: f64,
    global: &AveragedObjective,
) -> Result<ErrorVector> {
    if minimizer.len() != state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "minimizer has length {}, state dimension is {}",
            minimizer.len(),
            state.dim()
        )));
    }
    let n = state.agents() as f64;
    let convergence = n.sqrt() * (state.y_mean() - minimizer).norm();
    let consensus = consensus_error(&state.y);
    let mut sq = 0.0;
    for j in 0..state.agents() {
        let gj = global.gradient(&row_vector(&state.y, j));
        let sj = row_vector(&state.s, j);
        sq += (sj - gj).norm_squared();
    }
    let gradient = sq.sqrt() / smoothness;
    Ok(ErrorVector { convergence, consensus, gradient })
}
