//! Loss oracles: differentiable local objectives with curvature constants.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::dataset::Shard;

/// Minimal interface consumed by the first-order solvers: value, gradient,
/// and the strong-convexity / smoothness constants `σ ≤ L` bounding the
/// curvature.
pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn strong_convexity(&self) -> f64;
    fn smoothness(&self) -> f64;
}

/// A per-agent empirical loss `f_j(x) = (1/m) Σ_z ℓ(x; z)`: adds per-sample
/// gradients (for variance-reduced inner loops) and Hessian access where
/// the loss admits it.
pub trait LossOracle: SmoothObjective {
    /// Number of samples `m` behind the finite sum.
    fn sample_count(&self) -> usize;

    /// Gradient of the single-sample loss `ℓ(·; z_idx)`.
    fn sample_gradient(&self, x: &DVector<f64>, idx: usize) -> DVector<f64>;

    /// Constant Hessian, available exactly when the loss is quadratic.
    fn hessian(&self) -> Option<&DMatrix<f64>> {
        None
    }

    /// Pointwise Hessian for losses where it is computable.
    fn hessian_at(&self, x: &DVector<f64>) -> Option<DMatrix<f64>>;
}

/// Quadratic loss `f(x) = ½ xᵀHx + cᵀx + c₀` with optional per-sample
/// structure from a least-squares shard.
pub struct QuadraticOracle {
    h: DMatrix<f64>,
    lin: DVector<f64>,
    offset: f64,
    samples: Option<(DMatrix<f64>, DVector<f64>)>,
    sigma: f64,
    l: f64,
}

impl QuadraticOracle {
    /// Least-squares loss `(1/2m)‖Ax − b‖²` over a shard; the Hessian
    /// `AᵀA/m` is computed and cached here.
    pub fn from_shard(shard: &Shard) -> Result<QuadraticOracle> {
        if shard.is_empty() {
            return Err(Error::InvalidConfig("empty shard".into()));
        }
        let m = shard.len() as f64;
        let h = shard.features.transpose() * &shard.features / m;
        let lin = -(shard.features.transpose() * &shard.targets) / m;
        let offset = shard.targets.norm_squared() / (2.0 * m);
        Self::build(h, lin, offset, Some((shard.features.clone(), shard.targets.clone())))
    }

    /// Quadratic from explicit parts; treated as a single-sample finite sum
    /// so the variance-reduced loops degenerate to full gradients.
    pub fn from_parts(h: DMatrix<f64>, lin: DVector<f64>, offset: f64) -> Result<QuadraticOracle> {
        Self::build(h, lin, offset, None)
    }

    fn build(
        h: DMatrix<f64>,
        lin: DVector<f64>,
        offset: f64,
        samples: Option<(DMatrix<f64>, DVector<f64>)>,
    ) -> Result<QuadraticOracle> {
        if h.nrows() != h.ncols() || h.nrows() != lin.len() {
            return Err(Error::DimensionMismatch("Hessian and linear term disagree".into()));
        }
        if !linalg::is_symmetric(&h, 1e-10) {
            return Err(Error::Validation("quadratic Hessian must be symmetric".into()));
        }
        let ev = linalg::symmetric_eigenvalues(&h);
        let sigma = ev[0];
        let l = ev[ev.len() - 1];
        if sigma < -1e-10 {
            return Err(Error::Validation(format!(
                "Hessian has negative eigenvalue {sigma}"
            )));
        }
        Ok(QuadraticOracle { h, lin, offset, samples, sigma: sigma.max(0.0), l })
    }

    pub fn hessian_ref(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.lin
    }
}

impl SmoothObjective for QuadraticOracle {
    fn dim(&self) -> usize {
        self.lin.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.h * x)[(0, 0)] + self.lin.dot(x) + self.offset
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x + &self.lin
    }

    fn strong_convexity(&self) -> f64 {
        self.sigma
    }

    fn smoothness(&self) -> f64 {
        self.l
    }
}

impl LossOracle for QuadraticOracle {
    fn sample_count(&self) -> usize {
        match &self.samples {
            Some((a, _)) => a.nrows(),
            None => 1,
        }
    }

    fn sample_gradient(&self, x: &DVector<f64>, idx: usize) -> DVector<f64> {
        match &self.samples {
            Some((a, b)) => {
                let row = a.row(idx);
                let residual = row.dot(&x.transpose()) - b[idx];
                row.transpose() * residual
            }
            None => self.gradient(x),
        }
    }

    fn hessian(&self) -> Option<&DMatrix<f64>> {
        Some(&self.h)
    }

    fn hessian_at(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.h.clone())
    }
}

/// Binary logistic regression with ridge penalty. The per-sample loss is
/// `log(1 + exp(aᵀx)) − (1 − b)·aᵀx + (λ/2)‖x‖²` for labels in {0, 1},
/// which models `P(b = 1) = 1/(1 + exp(aᵀx))`. Curvature bounds:
/// `σ ≥ λ` and `L ≤ λ + λ_max(AᵀA)/(4m)`.
pub struct LogisticOracle {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    lambda: f64,
    sigma: f64,
    l: f64,
}

impl LogisticOracle {
    pub fn from_shard(shard: &Shard, lambda: f64) -> Result<LogisticOracle> {
        if shard.is_empty() {
            return Err(Error::InvalidConfig("empty shard".into()));
        }
        if lambda < 0.0 {
            return Err(Error::InvalidConfig("ridge weight must be nonnegative".into()));
        }
        for (i, &b) in shard.targets.iter().enumerate() {
            if b != 0.0 && b != 1.0 {
                return Err(Error::Validation(format!(
                    "label at shard row {i} is {b}, expected 0 or 1"
                )));
            }
        }
        let m = shard.len() as f64;
        let gram = shard.features.transpose() * &shard.features / m;
        let top = linalg::symmetric_eigenvalues(&gram);
        let l = lambda + top[top.len() - 1] / 4.0;
        Ok(LogisticOracle {
            features: shard.features.clone(),
            labels: shard.targets.clone(),
            lambda,
            sigma: lambda,
            l,
        })
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl SmoothObjective for LogisticOracle {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let m = self.labels.len() as f64;
        let scores = &self.features * x;
        let mut total = 0.0;
        for (i, &t) in scores.iter().enumerate() {
            total += log1p_exp(t) - (1.0 - self.labels[i]) * t;
        }
        total / m + 0.5 * self.lambda * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.labels.len() as f64;
        let scores = &self.features * x;
        let weights =
            DVector::from_fn(scores.len(), |i, _| sigmoid(scores[i]) - 1.0 + self.labels[i]);
        self.features.transpose() * weights / m + x * self.lambda
    }

    fn strong_convexity(&self) -> f64 {
        self.sigma
    }

    fn smoothness(&self) -> f64 {
        self.l
    }
}

impl LossOracle for LogisticOracle {
    fn sample_count(&self) -> usize {
        self.labels.len()
    }

    fn sample_gradient(&self, x: &DVector<f64>, idx: usize) -> DVector<f64> {
        let row = self.features.row(idx);
        let t = row.dot(&x.transpose());
        row.transpose() * (sigmoid(t) - 1.0 + self.labels[idx]) + x * self.lambda
    }

    fn hessian_at(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let m = self.labels.len() as f64;
        let d = self.dim();
        let scores = &self.features * x;
        let mut h = DMatrix::identity(d, d) * self.lambda;
        for (i, &t) in scores.iter().enumerate() {
            let s = sigmoid(t);
            let w = s * (1.0 - s) / m;
            let row = self.features.row(i);
            for p in 0..d {
                for q in 0..d {
                    h[(p, q)] += w * row[p] * row[q];
                }
            }
        }
        Some(h)
    }
}

/// Curvature summary of an agent ensemble: `σ`, `L`, the condition number,
/// the homogeneity parameter `β = max_j ‖∇²f_j − ∇²f‖`, and the averaged
/// Hessian when the losses are quadratic.
#[derive(Debug, Clone)]
pub struct ProblemConstants {
    pub sigma: f64,
    pub smoothness: f64,
    pub kappa: f64,
    pub beta: f64,
    pub mean_hessian: Option<DMatrix<f64>>,
    /// True when `beta` was sampled at probe points rather than computed
    /// from constant Hessians.
    pub beta_is_estimate: bool,
}

/// How to measure the ensemble constants.
pub enum ConstantsMode<'a> {
    /// All oracles expose a constant Hessian; eigenvalue computations are
    /// exact.
    Exact,
    /// Non-quadratic losses: the Hessian deviation is maximized over the
    /// supplied probe points and flagged as an estimate.
    Sampled(&'a [DVector<f64>]),
}

pub fn measure_constants(
    oracles: &[&dyn LossOracle],
    mode: ConstantsMode<'_>,
) -> Result<ProblemConstants> {
    if oracles.is_empty() {
        return Err(Error::InvalidConfig("no oracles supplied".into()));
    }
    match mode {
        ConstantsMode::Exact => {
            let hessians: Vec<&DMatrix<f64>> = oracles
                .iter()
                .map(|o| {
                    o.hessian().ok_or_else(|| {
                        Error::InvalidConfig(
                            "exact constants need constant (quadratic) Hessians".into(),
                        )
                    })
                })
                .collect::<Result<_>>()?;
            let n = hessians.len() as f64;
            let d = hessians[0].nrows();
            let mut mean = DMatrix::zeros(d, d);
            for h in &hessians {
                mean += *h;
            }
            mean /= n;
            let mut sigma = f64::INFINITY;
            let mut l = 0.0f64;
            let mut beta = 0.0f64;
            for h in &hessians {
                let ev = linalg::symmetric_eigenvalues(h);
                sigma = sigma.min(ev[0]);
                l = l.max(ev[ev.len() - 1]);
                beta = beta.max(linalg::spectral_norm(&(*h - &mean)));
            }
            Ok(ProblemConstants {
                sigma,
                smoothness: l,
                kappa: l / sigma,
                beta,
                mean_hessian: Some(mean),
                beta_is_estimate: false,
            })
        }
        ConstantsMode::Sampled(probes) => {
            if probes.is_empty() {
                return Err(Error::InvalidConfig("sampled constants need probe points".into()));
            }
            let sigma = oracles.iter().map(|o| o.strong_convexity()).fold(f64::INFINITY, f64::min);
            let l = oracles.iter().map(|o| o.smoothness()).fold(0.0f64, f64::max);
            let mut beta = 0.0f64;
            for x in probes {
                let hs: Vec<DMatrix<f64>> = oracles
                    .iter()
                    .map(|o| {
                        o.hessian_at(x).ok_or_else(|| {
                            Error::InvalidConfig("oracle cannot evaluate a pointwise Hessian".into())
                        })
                    })
                    .collect::<Result<_>>()?;
                let d = hs[0].nrows();
                let mut mean = DMatrix::zeros(d, d);
                for h in &hs {
                    mean += h;
                }
                mean /= hs.len() as f64;
                for h in &hs {
                    beta = beta.max(linalg::spectral_norm(&(h - &mean)));
                }
            }
            Ok(ProblemConstants {
                sigma,
                smoothness: l,
                kappa: l / sigma,
                beta,
                mean_hessian: None,
                beta_is_estimate: true,
            })
        }
    }
}
