//! Convergence-rate formulas for the tracked approximate-Newton iteration.

use crate::error::{Error, Result};

/// Parameter bundle the rate theory is evaluated at: curvature constants
/// `σ ≤ L`, homogeneity `β`, effective mixing rate `α = α₀^K`, and the
/// local regularizer `μ`. Derived quantities `η = 1/(σ+μ)` and
/// `γ = L/(L+μ)` appear throughout the bounds.
#[derive(Debug, Clone, Copy)]
pub struct RateModel {
    pub sigma: f64,
    pub smoothness: f64,
    pub beta: f64,
    pub alpha: f64,
    pub mu: f64,
}

impl RateModel {
    pub fn new(sigma: f64, smoothness: f64, beta: f64, alpha: f64, mu: f64) -> Result<RateModel> {
        if !(sigma > 0.0 && smoothness >= sigma) {
            return Err(Error::Domain(format!(
                "need 0 < sigma <= L, got sigma = {sigma}, L = {smoothness}"
            )));
        }
        if beta < 0.0 {
            return Err(Error::Domain(format!("homogeneity must be nonnegative, got {beta}")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!("mixing rate must lie in [0, 1), got {alpha}")));
        }
        if mu < 0.0 {
            return Err(Error::Domain(format!("regularizer must be nonnegative, got {mu}")));
        }
        Ok(RateModel { sigma, smoothness, beta, alpha, mu })
    }

    pub fn kappa(&self) -> f64 {
        self.smoothness / self.sigma
    }

    pub fn eta(&self) -> f64 {
        1.0 / (self.sigma + self.mu)
    }

    pub fn gamma(&self) -> f64 {
        self.smoothness / (self.smoothness + self.mu)
    }

    /// Per-step contraction of the exactly averaged approximate-Newton step
    /// under quadratic losses:
    /// `1 − σ/(σ+μ) + (L/(L+μ))·β²/((σ+μ)(σ+μ−β))`. Defined for `β < σ+μ`.
    pub fn theta1(&self) -> Result<f64> {
        let sm = self.sigma + self.mu;
        if self.beta >= sm {
            return Err(Error::Domain(format!(
                "theta1 requires beta < sigma + mu, got beta = {}, sigma + mu = {sm}",
                self.beta
            )));
        }
        Ok(1.0 - self.sigma / sm + self.gamma() * self.beta * self.beta / (sm * (sm - self.beta)))
    }

    /// Strongly convex analogue:
    /// `1 − σ/(σ+μ) + (β/(σ+μ))·√(1 − (μ/(σ+μ))²)`.
    pub fn theta2(&self) -> f64 {
        let sm = self.sigma + self.mu;
        let ratio = self.mu / sm;
        1.0 - self.sigma / sm + self.beta / sm * (1.0 - ratio * ratio).sqrt()
    }

    /// Linear rate bound for the networked iteration under quadratic
    /// losses: the largest of the averaged-step, consensus, and tracking
    /// contraction terms.
    pub fn rho1(&self) -> Result<f64> {
        let theta1 = self.theta1()?;
        let eta = self.eta();
        let l = self.smoothness;
        let a = 0.5 * (1.0 + theta1);
        let b = self.alpha
            + 140.0 * eta * l / (1.0 - self.alpha) * (self.beta / self.sigma + 1.0);
        let c = 0.5 * (1.0 + self.alpha) + 2.0 * eta * self.beta;
        Ok(a.max(b).max(c))
    }

    /// Linear rate bound for general smooth strongly convex losses.
    pub fn rho2(&self) -> f64 {
        let theta2 = self.theta2();
        let eta = self.eta();
        let a = 0.5 * (1.0 + theta2);
        let b = self.alpha + 170.0 * self.kappa() * eta * self.smoothness / (1.0 - self.alpha);
        let c = 0.5 * (1.0 + self.alpha) + 2.0 * eta * self.beta;
        a.max(b).max(c)
    }
}
