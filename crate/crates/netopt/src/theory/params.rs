//! Parameter selection rules that make the rate bounds contract.

use crate::error::{Error, Result};

/// Which guarantee the parameters should satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRegime {
    /// Quadratic losses with a caller-chosen round count `K`.
    QuadraticFixedK,
    /// Quadratic losses; picks `K` so the effective mixing rate drops to
    /// `1/(2κ)`, decoupling the iteration count from the topology.
    QuadraticAutoK,
    /// Smooth strongly convex losses with fixed `K`.
    StronglyConvexFixedK,
    /// Smooth strongly convex losses with the auto-`K` rule.
    StronglyConvexAutoK,
    /// Variance-reduced local solves; also returns the inner step size and
    /// loop length for both inner estimators.
    VarianceReduced,
}

/// Inner-loop parameters for a variance-reduced local solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerParams {
    pub step: f64,
    pub loop_len: usize,
}

#[derive(Debug, Clone)]
pub struct SelectedParams {
    pub mu: f64,
    pub k: usize,
    /// Effective mixing rate `alpha0^K` the rule was evaluated at.
    pub alpha: f64,
    /// Inner parameters for the anchored estimator (variance-reduced
    /// regime only).
    pub svrg: Option<InnerParams>,
    /// Inner parameters for the recursive estimator.
    pub sarah: Option<InnerParams>,
    /// Set when `beta/sigma` exceeds 1/200, outside the variance-reduced
    /// guarantee's homogeneity requirement.
    pub homogeneity_warning: bool,
}

/// Applies the selection rule. `k_fixed` is required by the fixed-`K`
/// regimes and ignored by the others.
pub fn select_parameters(
    regime: SelectionRegime,
    sigma: f64,
    smoothness: f64,
    beta: f64,
    alpha0: f64,
    k_fixed: Option<usize>,
) -> Result<SelectedParams> {
    if !(sigma > 0.0 && smoothness >= sigma) {
        return Err(Error::Domain(format!(
            "need 0 < sigma <= L, got sigma = {sigma}, L = {smoothness}"
        )));
    }
    if !(0.0..1.0).contains(&alpha0) {
        return Err(Error::Domain(format!("alpha0 must lie in [0, 1), got {alpha0}")));
    }
    if beta < 0.0 {
        return Err(Error::Domain(format!("beta must be nonnegative, got {beta}")));
    }
    let kappa = smoothness / sigma;
    let ratio = beta / sigma;

    let fixed_k = || -> Result<usize> {
        let k = k_fixed.ok_or_else(|| {
            Error::InvalidConfig("this regime needs an explicit round count K".into())
        })?;
        if k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        Ok(k)
    };

    match regime {
        SelectionRegime::QuadraticFixedK => {
            let k = fixed_k()?;
            let alpha = alpha0.powi(k as i32);
            let mu = 180.0 * smoothness * (ratio + 1.0) / ((1.0 - alpha) * (1.0 - alpha)) - sigma;
            Ok(SelectedParams { mu, k, alpha, svrg: None, sarah: None, homogeneity_warning: false })
        }
        SelectionRegime::QuadraticAutoK => {
            let (k, alpha) = rounds_for_target(alpha0, 1.0 / (2.0 * kappa));
            let mu = 360.0 * sigma * (ratio * ratio + 1.0) - sigma;
            Ok(SelectedParams { mu, k, alpha, svrg: None, sarah: None, homogeneity_warning: false })
        }
        SelectionRegime::StronglyConvexFixedK => {
            let k = fixed_k()?;
            let alpha = alpha0.powi(k as i32);
            let mu = 180.0 * kappa * smoothness / ((1.0 - alpha) * (1.0 - alpha)) - sigma;
            Ok(SelectedParams { mu, k, alpha, svrg: None, sarah: None, homogeneity_warning: false })
        }
        SelectionRegime::StronglyConvexAutoK => {
            let (k, alpha) = rounds_for_target(alpha0, 1.0 / (2.0 * kappa));
            let mu = 360.0 * smoothness * (ratio + 1.0) - sigma;
            Ok(SelectedParams { mu, k, alpha, svrg: None, sarah: None, homogeneity_warning: false })
        }
        SelectionRegime::VarianceReduced => {
            let (k, alpha) = rounds_for_target(alpha0, 1.0 / (70.0 * kappa));
            let svrg_margin = 1.0 - 4.0 * ratio;
            if svrg_margin <= 0.0 {
                return Err(Error::Domain(format!(
                    "anchored inner parameters need beta/sigma < 1/4, got {ratio}"
                )));
            }
            let svrg = InnerParams {
                step: svrg_margin / (40.0 * smoothness),
                loop_len: (160.0 * kappa / (svrg_margin * svrg_margin)).ceil() as usize,
            };
            let r2 = ratio * ratio;
            let sarah_margin = 1.0 - 8.0 * r2;
            if sarah_margin <= 0.0 {
                return Err(Error::Domain(format!(
                    "recursive inner parameters need 8(beta/sigma)^2 < 1, got beta/sigma = {ratio}"
                )));
            }
            let sarah = InnerParams {
                step: 2.0 / smoothness * sarah_margin / (9.0 - 8.0 * r2),
                loop_len: (2.0 * kappa * (9.0 - 8.0 * r2) / (sarah_margin * sarah_margin)).ceil()
                    as usize,
            };
            Ok(SelectedParams {
                mu: 0.0,
                k,
                alpha,
                svrg: Some(svrg),
                sarah: Some(sarah),
                homogeneity_warning: ratio > 1.0 / 200.0,
            })
        }
    }
}

/// Smallest `K ≥ 1` with `alpha0^K ≤ target`, together with the achieved
/// rate. A vanishing `alpha0` already meets any positive target in one
/// round.
fn rounds_for_target(alpha0: f64, target: f64) -> (usize, f64) {
    if alpha0 <= 0.0 || alpha0 <= target {
        return (1, alpha0);
    }
    let mut k = (target.ln() / alpha0.ln()).ceil().max(1.0) as usize;
    // guard the ceil against floating rounding right at the boundary
    while alpha0.powi(k as i32) > target {
        k += 1;
    }
    (k, alpha0.powi(k as i32))
}
