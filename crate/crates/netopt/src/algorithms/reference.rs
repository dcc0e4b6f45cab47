//! High-accuracy reference solutions the relative optimality gap is
//! measured against.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SpdSolver;
use crate::problem::{LossOracle, Regularizer, SmoothObjective};
use crate::solvers::{fista, nesterov_agd};

use super::state::{validate_ensemble, AveragedObjective};

/// Minimizer and optimal value of the global objective.
#[derive(Debug, Clone)]
pub struct Reference {
    pub minimizer: DVector<f64>,
    pub value: f64,
}

const REFERENCE_TOL: f64 = 1e-12;

/// Smooth reference: a direct symmetric solve when every oracle exposes a
/// constant Hessian, otherwise an accelerated-gradient run to 1e-12
/// gradient norm on the averaged objective.
pub fn solve_reference(oracles: &[Arc<dyn LossOracle>]) -> Result<Reference> {
    let (n, d) = validate_ensemble(oracles)?;
    let global = AveragedObjective::new(oracles)?;
    if oracles.iter().all(|o| o.hessian().is_some()) {
        let mut mean_h = DMatrix::zeros(d, d);
        for o in oracles {
            mean_h += o.hessian().expect("checked above");
        }
        mean_h /= n as f64;
        // ∇f(0) is the averaged linear term of the quadratic
        let lin = global.gradient(&DVector::zeros(d));
        let minimizer = SpdSolver::new(mean_h)?.solve(&(-lin));
        let value = global.value(&minimizer);
        return Ok(Reference { minimizer, value });
    }
    let report = nesterov_agd(&global, &DVector::zeros(d), 1_000_000, REFERENCE_TOL)?;
    if !report.converged {
        return Err(Error::divergence(
            None,
            format!("reference solve stalled at gradient norm {}", report.residual_norm),
        ));
    }
    let value = global.value(&report.solution);
    Ok(Reference { minimizer: report.solution, value })
}

/// Composite reference: accelerated proximal gradient on the averaged
/// smooth part to 1e-12 mapping norm; the reported value includes the
/// regularizer.
pub fn solve_reference_composite(
    oracles: &[Arc<dyn LossOracle>],
    regularizer: &dyn Regularizer,
) -> Result<Reference> {
    let (_, d) = validate_ensemble(oracles)?;
    let global = AveragedObjective::new(oracles)?;
    let report = fista(&global, regularizer, &DVector::zeros(d), 2_000_000, REFERENCE_TOL)?;
    if !report.converged {
        return Err(Error::divergence(
            None,
            format!("composite reference solve stalled at mapping norm {}", report.residual_norm),
        ));
    }
    let value = global.value(&report.solution) + regularizer.value(&report.solution);
    Ok(Reference { minimizer: report.solution, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_synthetic, QuadraticOracle, SyntheticSpec};

    fn quadratic_ensemble(noise: f64, seed: u64) -> (Vec<Arc<dyn LossOracle>>, DVector<f64>) {
        let spec = SyntheticSpec {
            per_agent: 30,
            dim: 5,
            agents: 4,
            varrho: 0.3,
            noise_std: noise,
            identical_shards: false,
        };
        let (shards, truth) = generate_synthetic(&spec, seed).unwrap();
        let oracles = shards
            .iter()
            .map(|s| Arc::new(QuadraticOracle::from_shard(s).unwrap()) as Arc<dyn LossOracle>)
            .collect();
        (oracles, truth)
    }

    #[test]
    fn noiseless_reference_recovers_the_truth() {
        let (oracles, truth) = quadratic_ensemble(0.0, 5);
        let reference = solve_reference(&oracles).unwrap();
        assert!((reference.minimizer - truth).norm() < 1e-8);
        assert!(reference.value.abs() < 1e-14);
    }

    #[test]
    fn reference_gradient_is_stationary() {
        let (oracles, _) = quadratic_ensemble(0.5, 7);
        let reference = solve_reference(&oracles).unwrap();
        let global = AveragedObjective::new(&oracles).unwrap();
        assert!(global.gradient(&reference.minimizer).norm() < 1e-10);
    }

    #[test]
    fn direct_and_iterative_routes_agree() {
        let (oracles, _) = quadratic_ensemble(0.3, 11);
        let direct = solve_reference(&oracles).unwrap();
        // force the iterative path by rebuilding the ensemble behind a
        // wrapper that hides the constant Hessian
        struct NoHessian(Arc<dyn LossOracle>);
        impl SmoothObjective for NoHessian {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn value(&self, x: &DVector<f64>) -> f64 {
                self.0.value(x)
            }
            fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
                self.0.gradient(x)
            }
            fn strong_convexity(&self) -> f64 {
                self.0.strong_convexity()
            }
            fn smoothness(&self) -> f64 {
                self.0.smoothness()
            }
        }
        impl LossOracle for NoHessian {
            fn sample_count(&self) -> usize {
                self.0.sample_count()
            }
            fn sample_gradient(&self, x: &DVector<f64>, idx: usize) -> DVector<f64> {
                self.0.sample_gradient(x, idx)
            }
            fn hessian_at(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
                self.0.hessian_at(x)
            }
        }
        let hidden: Vec<Arc<dyn LossOracle>> =
            oracles.iter().map(|o| Arc::new(NoHessian(o.clone())) as Arc<dyn LossOracle>).collect();
        let iterative = solve_reference(&hidden).unwrap();
        assert!(
            (direct.value - iterative.value).abs() <= 1e-10 * direct.value.abs().max(1.0),
            "direct {} vs iterative {}",
            direct.value,
            iterative.value
        );
        assert!((direct.minimizer - iterative.minimizer).norm() < 1e-8);
    }
}
