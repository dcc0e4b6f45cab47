//! Nonsmooth regularizers and their proximal maps.

use std::sync::Arc;

use nalgebra::DVector;

use crate::problem::oracle::LossOracle;

/// Convex regularizer `g` with an exact proximal map
/// `prox_{τg}(v) = argmin_z g(z) + ‖z − v‖²/(2τ)`.
pub trait Regularizer: Send + Sync {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn prox(&self, v: &DVector<f64>, tau: f64) -> DVector<f64>;
}

/// Componentwise soft threshold `sign(v_i)·max(|v_i| − tau, 0)`, the
/// proximal map of `tau·‖·‖₁`.
pub fn l1_prox(v: &DVector<f64>, tau: f64) -> DVector<f64> {
    assert!(tau >= 0.0, "threshold must be nonnegative");
    DVector::from_fn(v.len(), |i, _| soft_threshold(v[i], tau))
}

pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    v.signum() * (v.abs() - tau).max(0.0)
}

/// Weighted ℓ₁ norm `g(x) = weight·‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub weight: f64,
}

impl Regularizer for L1Norm {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: &DVector<f64>, tau: f64) -> DVector<f64> {
        l1_prox(v, tau * self.weight)
    }
}

/// The zero regularizer; its prox is the identity.
#[derive(Debug, Clone, Copy)]
pub struct ZeroReg;

impl Regularizer for ZeroReg {
    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn prox(&self, v: &DVector<f64>, _tau: f64) -> DVector<f64> {
        v.clone()
    }
}

/// Composite problem: smooth per-agent losses plus one shared (possibly
/// nonsmooth) regularizer applied to the global objective.
pub struct CompositeProblem {
    pub smooth: Vec<Arc<dyn LossOracle>>,
    pub regularizer: Arc<dyn Regularizer>,
}
