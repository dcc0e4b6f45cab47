//! The regularized local subproblem objective used by the approximate
//! Newton engines.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::{LossOracle, SmoothObjective};

/// Local surrogate around an anchor point `y` with tracked global-gradient
/// estimate `s`:
///
/// ```text
/// value(z)    = f(z) − ⟨∇f(y) − s, z⟩ + (μ/2)‖z − y‖²
/// gradient(z) = ∇f(z) − ∇f(y) + s + μ(z − y)
/// ```
///
/// By construction the gradient at the anchor is exactly `s`, so minimizing
/// the surrogate takes an approximate Newton step driven by the tracked
/// global gradient while only touching local curvature. Strong convexity
/// and smoothness shift to `σ + μ` and `L + μ`.
pub struct SurrogateOracle<'a> {
    base: &'a dyn LossOracle,
    anchor: DVector<f64>,
    tracked: DVector<f64>,
    mu: f64,
    grad_at_anchor: DVector<f64>,
}

pub fn make_surrogate<'a>(
    base: &'a dyn LossOracle,
    anchor: &DVector<f64>,
    tracked: &DVector<f64>,
    mu: f64,
) -> Result<SurrogateOracle<'a>> {
    if anchor.len() != base.dim() || tracked.len() != base.dim() {
        return Err(Error::DimensionMismatch(format!(
            "anchor/tracked length {} vs oracle dimension {}",
            anchor.len(),
            base.dim()
        )));
    }
    if mu < 0.0 {
        return Err(Error::InvalidConfig("surrogate regularizer must be nonnegative".into()));
    }
    let grad_at_anchor = base.gradient(anchor);
    Ok(SurrogateOracle {
        base,
        anchor: anchor.clone(),
        tracked: tracked.clone(),
        mu,
        grad_at_anchor,
    })
}

impl SurrogateOracle<'_> {
    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl SmoothObjective for SurrogateOracle<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        let correction = &self.grad_at_anchor - &self.tracked;
        let dz = z - &self.anchor;
        self.base.value(z) - correction.dot(z) + 0.5 * self.mu * dz.norm_squared()
    }

    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        self.base.gradient(z) - &self.grad_at_anchor + &self.tracked + (z - &self.anchor) * self.mu
    }

    fn strong_convexity(&self) -> f64 {
        self.base.strong_convexity() + self.mu
    }

    fn smoothness(&self) -> f64 {
        self.base.smoothness() + self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::QuadraticOracle;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.gen::<f64>() - 0.5);
        &a * a.transpose() + DMatrix::identity(d, d) * 0.3
    }

    #[test]
    fn gradient_at_anchor_equals_tracked_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let h = random_spd(&mut rng, 4);
        let oracle =
            QuadraticOracle::from_parts(h, DVector::from_fn(4, |_, _| rng.gen()), 0.0).unwrap();
        let anchor = DVector::from_fn(4, |_, _| rng.gen::<f64>());
        let tracked = DVector::from_fn(4, |_, _| rng.gen::<f64>() - 0.5);
        let sur = make_surrogate(&oracle, &anchor, &tracked, 2.5).unwrap();
        assert_eq!(sur.gradient(&anchor), tracked);
    }

    #[test]
    fn exact_tracking_recovers_base_minimizer() {
        // with s = ∇f(y) and μ = 0 the surrogate is f up to a constant
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let h = random_spd(&mut rng, 3);
        let lin = DVector::from_fn(3, |_, _| rng.gen::<f64>());
        let oracle = QuadraticOracle::from_parts(h.clone(), lin.clone(), 0.0).unwrap();
        let anchor = DVector::from_fn(3, |_, _| rng.gen::<f64>());
        let tracked = oracle.gradient(&anchor);
        let sur = make_surrogate(&oracle, &anchor, &tracked, 0.0).unwrap();
        let minimizer = crate::linalg::SpdSolver::new(h).unwrap().solve(&(-lin));
        assert!(sur.gradient(&minimizer).norm() < 1e-12);
    }

    #[test]
    fn surrogate_gradients_are_strongly_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let h = random_spd(&mut rng, 5);
        let oracle = QuadraticOracle::from_parts(h, DVector::zeros(5), 0.0).unwrap();
        let anchor = DVector::from_fn(5, |_, _| rng.gen::<f64>());
        let tracked = DVector::from_fn(5, |_, _| rng.gen::<f64>());
        let mu = 1.3;
        let sur = make_surrogate(&oracle, &anchor, &tracked, mu).unwrap();
        let lower = sur.strong_convexity();
        for _ in 0..50 {
            let z1 = DVector::from_fn(5, |_, _| rng.gen::<f64>() * 4.0 - 2.0);
            let z2 = DVector::from_fn(5, |_, _| rng.gen::<f64>() * 4.0 - 2.0);
            let dz = &z1 - &z2;
            let dg = sur.gradient(&z1) - sur.gradient(&z2);
            assert!(dg.dot(&dz) >= lower * dz.norm_squared() - 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let oracle =
            QuadraticOracle::from_parts(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let bad = DVector::zeros(3);
        assert!(make_surrogate(&oracle, &bad, &bad, 0.0).is_err());
    }
}
