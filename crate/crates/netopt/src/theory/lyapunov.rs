//! Error-propagation (Lyapunov) matrices and their spectral radii.
//!
//! Each engine's per-step error dynamics are bounded componentwise by a
//! small nonnegative matrix `G`: `e⁽ᵗ⁾ ≤ G e⁽ᵗ⁻¹⁾`. The spectral radius of
//! `G` certifies linear convergence.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::theory::rates::RateModel;

/// Which engine's error dynamics the matrix bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationKind {
    /// Full 3×3 matrix for the tracked approximate-Newton step under
    /// quadratic losses (error vector: averaged distance, consensus,
    /// scaled tracking error).
    DaneQuadratic,
    /// Entrywise-dominating simplification of [`Self::DaneQuadratic`] used
    /// by the `rho1` bound argument.
    DaneQuadraticSimplified,
    /// Full 3×3 matrix for smooth strongly convex losses.
    DaneStronglyConvex,
    /// Entrywise-dominating simplification used by the `rho2` bound.
    DaneStronglyConvexSimplified,
    /// 4×4 matrix for the variance-reduced engine with anchored inner
    /// estimator (function-value error vector, in expectation).
    Svrg,
    /// 4×4 matrix for the recursive inner estimator under quadratic losses
    /// (gradient-norm error vector, in expectation).
    Sarah,
}

/// A nonnegative error-propagation matrix with its provenance tag.
#[derive(Debug, Clone)]
pub struct PropagationMatrix {
    pub matrix: DMatrix<f64>,
    pub kind: PropagationKind,
}

/// Builds the requested matrix at the given parameters. The variance
/// reduction variants take the inner solver's contraction factor at its
/// analytical bound unless `nu_override` substitutes a measured one.
pub fn propagation_matrix(
    model: &RateModel,
    kind: PropagationKind,
    nu_override: Option<f64>,
) -> Result<PropagationMatrix> {
    let matrix = match kind {
        PropagationKind::DaneQuadratic => dane_quadratic(model)?,
        PropagationKind::DaneQuadraticSimplified => dane_quadratic_simplified(model)?,
        PropagationKind::DaneStronglyConvex => dane_strongly_convex(model)?,
        PropagationKind::DaneStronglyConvexSimplified => dane_strongly_convex_simplified(model)?,
        PropagationKind::Svrg => variance_reduced(model, nu_override, VarianceFlavor::Anchored)?,
        PropagationKind::Sarah => variance_reduced(model, nu_override, VarianceFlavor::Recursive)?,
    };
    debug_assert!(matrix.iter().all(|v| *v >= 0.0 && v.is_finite()));
    Ok(PropagationMatrix { matrix, kind })
}

fn dane_quadratic(m: &RateModel) -> Result<DMatrix<f64>> {
    let theta = m.theta1()?;
    let (a, b, l) = (m.alpha, m.beta, m.smoothness);
    let (eta, gamma) = (m.eta(), m.gamma());
    let bl = b / l;
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            theta,
            gamma * eta * b + eta * b,
            eta * eta * l * b,
            //
            a * gamma * eta * b,
            a + a * eta * l,
            a * eta * l,
            //
            bl + theta * bl + a * gamma * eta * b * bl,
            a * bl + a + 1.0 + gamma * eta * b * bl + eta * b * bl + a * bl + a * eta * b,
            a + gamma * eta * b * bl + a * eta * b,
        ],
    ))
}

fn dane_quadratic_simplified(m: &RateModel) -> Result<DMatrix<f64>> {
    let theta = m.theta1()?;
    let (a, b, l) = (m.alpha, m.beta, m.smoothness);
    let (eta, gamma) = (m.eta(), m.gamma());
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            theta,
            2.0 * eta * b,
            eta * eta * l * b,
            //
            a * gamma * eta * b,
            a + a * eta * l,
            a * eta * l,
            //
            3.0 * b / l,
            7.0,
            a + 2.0 * eta * b,
        ],
    ))
}

fn dane_strongly_convex(m: &RateModel) -> Result<DMatrix<f64>> {
    check_strongly_convex_domain(m)?;
    let theta = m.theta2();
    let (a, b, l) = (m.alpha, m.beta, m.smoothness);
    let (eta, gamma) = (m.eta(), m.gamma());
    let bl = b / l;
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            theta,
            eta * l,
            gamma * eta * l,
            //
            a * gamma * eta * l,
            a + a * eta * l,
            a * eta * l,
            //
            bl + theta * bl + a * gamma * eta * b,
            a + 1.0 + a * bl + eta * b + a * bl + a * eta * b,
            a + gamma * eta * b + a * eta * b,
        ],
    ))
}

fn dane_strongly_convex_simplified(m: &RateModel) -> Result<DMatrix<f64>> {
    check_strongly_convex_domain(m)?;
    let theta = m.theta2();
    let (a, b, l) = (m.alpha, m.beta, m.smoothness);
    let (eta, gamma) = (m.eta(), m.gamma());
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            theta,
            2.0 * eta * l,
            gamma * eta * l,
            //
            a * gamma * eta * l,
            a + a * eta * l,
            a * eta * l,
            //
            3.0 * b / l,
            7.0,
            a + 2.0 * eta * b,
        ],
    ))
}

fn check_strongly_convex_domain(m: &RateModel) -> Result<()> {
    let sm = m.sigma + m.mu;
    let lhs = (m.beta / sm) * (m.beta / sm);
    let rhs = m.sigma / (m.sigma + 2.0 * m.mu);
    if lhs > rhs {
        return Err(Error::Domain(format!(
            "(beta/(sigma+mu))^2 <= sigma/(sigma+2mu) violated: {lhs} > {rhs}"
        )));
    }
    Ok(())
}

enum VarianceFlavor {
    Anchored,
    Recursive,
}

fn variance_reduced(
    m: &RateModel,
    nu_override: Option<f64>,
    flavor: VarianceFlavor,
) -> Result<DMatrix<f64>> {
    let kappa = m.kappa();
    let ratio = m.beta / m.sigma;
    let denom = 1.0 - 3.0 * m.alpha * kappa - 3.0 * ratio;
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "1 - 3*alpha*kappa - 3*beta/sigma > 0 violated: got {denom}"
        )));
    }
    let zeta = 1.0 / denom;
    let a = m.alpha;
    let nu = match (&flavor, nu_override) {
        (_, Some(nu)) => nu,
        (VarianceFlavor::Anchored, None) => {
            // analytical contraction of the anchored inner loop
            0.5 * (m.sigma - 2.0 * m.beta) / (m.sigma - 3.0 * m.beta)
        }
        (VarianceFlavor::Recursive, None) => {
            let r2 = ratio * ratio;
            0.5 / (1.0 - 4.0 * r2)
        }
    };
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Domain(format!("inner contraction factor must be positive, got {nu}")));
    }
    let top_left = (nu * (1.0 + 3.0 * a * kappa + 4.0 * ratio) + ratio) * zeta;
    let g = match flavor {
        VarianceFlavor::Anchored => DMatrix::from_row_slice(
            4,
            4,
            &[
                top_left,
                8.0 * ratio * zeta,
                a * zeta / kappa,
                zeta / 16.0,
                //
                0.5,
                0.0,
                0.0,
                0.0,
                //
                8.0 * ratio * ratio,
                64.0 * ratio * ratio,
                4.0 * a * a,
                a * kappa / 2.0,
                //
                64.0 * a * kappa,
                0.0,
                0.0,
                0.0,
            ],
        ),
        VarianceFlavor::Recursive => DMatrix::from_row_slice(
            4,
            4,
            &[
                top_left,
                8.0 * ratio * zeta,
                2.0 * a * zeta / kappa,
                zeta / 8.0,
                //
                0.5,
                0.0,
                0.0,
                0.0,
                //
                4.0 * ratio * ratio,
                32.0 * ratio * ratio,
                4.0 * a * a,
                a * kappa / 2.0,
                //
                32.0 * a * kappa,
                0.0,
                0.0,
                0.0,
            ],
        ),
    };
    Ok(g)
}

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;

/// Spectral radius of a nonnegative matrix by power iteration (tolerance
/// 1e-12, at most 10⁵ iterations). The iteration runs on `G + I`, which
/// shifts the Perron root to strict dominance without moving the
/// eigenvector; 3×3 results are polished by Newton steps on the
/// characteristic polynomial as a cross-check of the iteration.
pub fn spectral_radius(g: &DMatrix<f64>) -> Result<f64> {
    let n = g.nrows();
    if n == 0 || n != g.ncols() {
        return Err(Error::DimensionMismatch("matrix must be square and nonempty".into()));
    }
    for v in g.iter() {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::Validation(format!("matrix entries must be finite and nonnegative, found {v}")));
        }
    }
    if n == 2 {
        // closed form: roots of λ² − tr·λ + det
        let tr = g[(0, 0)] + g[(1, 1)];
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        let disc = tr * tr - 4.0 * det;
        let rho = if disc >= 0.0 {
            let root = disc.sqrt();
            (0.5 * (tr + root)).abs().max((0.5 * (tr - root)).abs())
        } else {
            det.abs().sqrt()
        };
        return Ok(rho.max(0.0));
    }
    let shifted = g + DMatrix::identity(n, n);
    let mut v = DVector::from_element(n, 1.0);
    let mut lambda = 1.0f64;
    for _ in 0..POWER_MAX_ITERS {
        let w = &shifted * &v;
        let norm = w.amax();
        let next = w / norm;
        let step = (&next - &v).amax();
        v = next;
        let settled = (norm - lambda).abs() <= POWER_TOL * norm.max(1.0) && step <= POWER_TOL * 10.0;
        lambda = norm;
        if settled {
            break;
        }
    }
    let mut rho = (lambda - 1.0).max(0.0);
    if n == 3 {
        rho = polish_cubic_root(g, rho);
    }
    Ok(rho)
}

/// Newton refinement of a 3×3 spectral-radius estimate on the closed-form
/// characteristic polynomial; guards the power iteration against slow
/// convergence when eigenvalues cluster.
fn polish_cubic_root(g: &DMatrix<f64>, initial: f64) -> f64 {
    let trace = g[(0, 0)] + g[(1, 1)] + g[(2, 2)];
    let minors = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]
        + g[(0, 0)] * g[(2, 2)] - g[(0, 2)] * g[(2, 0)]
        + g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)];
    let det = g.determinant();
    let p = |x: f64| ((x - trace) * x + minors) * x - det;
    let dp = |x: f64| (3.0 * x - 2.0 * trace) * x + minors;

    let mut x = initial;
    for _ in 0..50 {
        let slope = dp(x);
        if slope.abs() < 1e-300 {
            break;
        }
        let step = p(x) / slope;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    // only accept the refinement if it stays a nearby root
    if x.is_finite() && (x - initial).abs() <= 1e-6 * initial.max(1.0) && p(x).abs() <= p(initial).abs() {
        x.max(0.0)
    } else {
        initial
    }
}

/// First componentwise violation of `e⁽ᵗ⁾ ≤ G e⁽ᵗ⁻¹⁾ + slack`, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationBreach {
    pub step: usize,
    pub component: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Verifies the componentwise inequality along a recorded error trace.
/// `errors[t]` is the error vector after step `t`; the check covers
/// `t = 1..errors.len()`. Returns `None` when every step satisfies the
/// bound.
pub fn propagation_check(
    errors: &[DVector<f64>],
    g: &DMatrix<f64>,
    slack: f64,
) -> Result<Option<PropagationBreach>> {
    for (t, e) in errors.iter().enumerate() {
        if e.len() != g.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "error vector at step {t} has length {}, matrix is {}x{}",
                e.len(),
                g.nrows(),
                g.ncols()
            )));
        }
    }
    for t in 1..errors.len() {
        let bound = g * &errors[t - 1];
        for i in 0..bound.len() {
            if errors[t][i] > bound[i] + slack {
                return Ok(Some(PropagationBreach {
                    step: t,
                    component: i,
                    lhs: errors[t][i],
                    rhs: bound[i],
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(sigma: f64, l: f64, beta: f64, alpha: f64, mu: f64) -> RateModel {
        RateModel::new(sigma, l, beta, alpha, mu).unwrap()
    }

    #[test]
    fn quadratic_matrix_with_no_coupling_is_upper_triangularish() {
        // β = 0, α = 0: the first row collapses to (θ₁, 0, 0)
        let m = model(1.0, 2.0, 0.0, 0.0, 3.0);
        let g = propagation_matrix(&m, PropagationKind::DaneQuadratic, None).unwrap().matrix;
        assert!((g[(0, 0)] - 0.75).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(0, 2)], 0.0);
        // second row vanishes entirely without mixing error
        assert_eq!(g[(1, 0)], 0.0);
        assert_eq!(g[(1, 1)], 0.0);
    }

    #[test]
    fn quadratic_matrix_generic_entries() {
        let m = model(1.0, 2.0, 0.5, 0.4, 3.0);
        let g = propagation_matrix(&m, PropagationKind::DaneQuadratic, None).unwrap().matrix;
        let (eta, gamma) = (m.eta(), m.gamma());
        // consensus row: (αγηβ, α + αηL, αηL)
        assert!((g[(1, 0)] - 0.4 * gamma * eta * 0.5).abs() < 1e-15);
        assert!((g[(1, 1)] - (0.4 + 0.4 * eta * 2.0)).abs() < 1e-15);
        assert!((g[(1, 2)] - 0.4 * eta * 2.0).abs() < 1e-15);
        // first row tracking coefficient η²Lβ
        assert!((g[(0, 2)] - eta * eta * 2.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn simplified_matrices_dominate_full_ones() {
        for &(sigma, l, beta, alpha) in &[(1.0, 2.0, 0.5, 0.3), (0.5, 4.0, 0.2, 0.7)] {
            let mu = 180.0 * l * (beta / sigma + 1.0) / ((1.0 - alpha) * (1.0 - alpha)) - sigma;
            let m = model(sigma, l, beta, alpha, mu);
            let full = propagation_matrix(&m, PropagationKind::DaneQuadratic, None).unwrap().matrix;
            let simple =
                propagation_matrix(&m, PropagationKind::DaneQuadraticSimplified, None).unwrap().matrix;
            for i in 0..3 {
                for j in 0..3 {
                    assert!(full[(i, j)] <= simple[(i, j)] + 1e-15, "entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn strongly_convex_domain_guard_names_inequality() {
        let m = model(1.0, 2.0, 10.0, 0.0, 5.0);
        let err = propagation_matrix(&m, PropagationKind::DaneStronglyConvex, None).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("sigma/(sigma+2mu)"), "{msg}");
    }

    #[test]
    fn variance_reduced_top_left_at_zero_coupling() {
        // α = 0, β = 0: ζ = 1 and the top-left entry is exactly ν = 1/2
        let m = model(1.0, 2.0, 0.0, 0.0, 0.0);
        for kind in [PropagationKind::Svrg, PropagationKind::Sarah] {
            let g = propagation_matrix(&m, kind, None).unwrap().matrix;
            assert!((g[(0, 0)] - 0.5).abs() < 1e-15);
            assert_eq!(g[(3, 0)], 0.0);
        }
    }

    #[test]
    fn variance_reduced_domain_guard() {
        let m = model(1.0, 2.0, 0.5, 0.0, 0.0); // 3β/σ = 1.5 > 1
        let err = propagation_matrix(&m, PropagationKind::Svrg, None).unwrap_err();
        assert!(format!("{err}").contains("3*beta/sigma"));
    }

    #[test]
    fn nu_override_replaces_analytical_bound() {
        let m = model(1.0, 2.0, 0.0, 0.0, 0.0);
        let g = propagation_matrix(&m, PropagationKind::Svrg, Some(0.25)).unwrap().matrix;
        assert!((g[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spectral_radius_of_diagonal() {
        let g = DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0, 0.1]);
        assert!((spectral_radius(&g).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_of_symmetric_permutation() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((spectral_radius(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_handles_imprimitive_matrices() {
        // eigenvalues ±√2: plain power iteration on G oscillates, the +I
        // shift does not
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 1.0, 0.0]);
        assert!((spectral_radius(&g).unwrap() - 2.0_f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn spectral_radius_of_nilpotent_is_zero() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(spectral_radius(&g).unwrap() < 1e-10);
    }

    #[test]
    fn spectral_radius_matches_dense_eigensolver() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(73);
        for n in [2usize, 3, 4] {
            for _ in 0..20 {
                let g = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
                let mine = spectral_radius(&g).unwrap();
                let reference = g
                    .clone()
                    .complex_eigenvalues()
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0f64, f64::max);
                assert!((mine - reference).abs() < 1e-9, "n={n}: {mine} vs {reference}");
            }
        }
    }

    #[test]
    fn spectral_radius_rejects_negative_entries() {
        let g = DMatrix::from_row_slice(2, 2, &[0.5, -0.1, 0.0, 0.2]);
        assert!(spectral_radius(&g).is_err());
    }

    #[test]
    fn propagation_check_passes_on_zero_trace() {
        let g = DMatrix::from_element(3, 3, 0.5);
        let errors = vec![DVector::zeros(3); 10];
        assert_eq!(propagation_check(&errors, &g, 0.0).unwrap(), None);
    }

    #[test]
    fn propagation_check_passes_on_exact_recursion() {
        let g = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.3]);
        let mut errors = vec![DVector::from_row_slice(&[1.0, 2.0])];
        for t in 1..20 {
            let next = &g * &errors[t - 1];
            errors.push(next);
        }
        assert_eq!(propagation_check(&errors, &g, 0.0).unwrap(), None);
    }

    #[test]
    fn propagation_check_reports_first_breach() {
        let g = DMatrix::identity(2, 2) * 0.5;
        let errors = vec![
            DVector::from_row_slice(&[1.0, 1.0]),
            DVector::from_row_slice(&[0.4, 0.6]), // second component breaches
            DVector::from_row_slice(&[0.1, 0.1]),
        ];
        let breach = propagation_check(&errors, &g, 1e-12).unwrap().unwrap();
        assert_eq!((breach.step, breach.component), (1, 1));
    }

    #[test]
    fn radius_of_propagation_matrix_stays_under_rho1_bound() {
        for &(sigma, l, beta, alpha) in &[(1.0, 2.0, 0.5, 0.0), (1.0, 8.0, 0.3, 0.4)] {
            let mu = 140.0 * l * (beta / sigma + 1.0) / ((1.0 - alpha) * (1.0 - alpha)) - sigma;
            let m = model(sigma, l, beta, alpha, mu);
            let g = propagation_matrix(&m, PropagationKind::DaneQuadraticSimplified, None)
                .unwrap()
                .matrix;
            let rho = spectral_radius(&g).unwrap();
            assert!(rho <= m.rho1().unwrap());
            assert!(rho < 1.0);
        }
    }
}
