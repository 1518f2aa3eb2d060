//! Built-in parametric families.
//!
//! * unit-variance Gaussian location, `d` in 1..=3 (exponential family, `phi(x) = x`)
//! * Bernoulli in its natural parameter, `d = 1` (exponential family)
//! * product Laplace location with unit scale, `d` in 1..=2 (not exponential)

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::grid::ParamBox;
use crate::numeric::{squared_distance, stream_rng};
use crate::quadrature::{integrate, Estimate, IntegrationSpec};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Mesh resolution used when searching a box for curvature extremes.
pub const CURVATURE_MESH: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    Gaussian { dim: usize },
    Bernoulli,
    Laplace { dim: usize },
}

/// Observations drawn from a family, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSample {
    pub values: Vec<f64>,
    pub dim: usize,
    /// `None` when the sample was supplied externally.
    pub seed: Option<u64>,
}

impl DataSample {
    pub fn new(values: Vec<f64>, dim: usize, seed: Option<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        if values.is_empty() {
            return Err(invalid("values", "a sample needs at least one point"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: values.len() % dim,
            });
        }
        Ok(Self { values, dim, seed })
    }

    pub fn external(values: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(values, dim, None)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, x) in m.iter_mut().zip(p) {
                *acc += x;
            }
        }
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

/// A fully specified member `P_theta` of a built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub family: Family,
    pub theta: Vec<f64>,
}

impl Member {
    pub fn new(family: Family, theta: Vec<f64>) -> Result<Self> {
        family.check_param(&theta)?;
        Ok(Self { family, theta })
    }
}

/// Location-family summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationSummary {
    pub dim: usize,
    /// `E||X - theta||`, the same for every member.
    pub first_central_moment: f64,
    /// Marginal medians of the `theta = 0` member.
    pub median_offset: Vec<f64>,
}

#[inline]
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[inline]
fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `p(1-p)` at natural parameter `t`.
#[inline]
fn logistic_variance(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

fn laplace_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * x.exp()
    } else {
        1.0 - 0.5 * (-x).exp()
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

impl Family {
    pub fn gaussian(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension {
                family: "gaussian",
                dim,
            });
        }
        Ok(Family::Gaussian { dim })
    }

    pub fn bernoulli() -> Self {
        Family::Bernoulli
    }

    pub fn laplace(dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension {
                family: "laplace",
                dim,
            });
        }
        Ok(Family::Laplace { dim })
    }

    /// Re-checks the dimension of a deserialized value.
    pub fn validate(self) -> Result<Self> {
        match self {
            Family::Gaussian { dim } => Self::gaussian(dim),
            Family::Bernoulli => Ok(self),
            Family::Laplace { dim } => Self::laplace(dim),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Family::Gaussian { dim } | Family::Laplace { dim } => dim,
            Family::Bernoulli => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Bernoulli => "bernoulli",
            Family::Laplace { .. } => "laplace",
        }
    }

    pub fn is_exponential(self) -> bool {
        !matches!(self, Family::Laplace { .. })
    }

    pub fn is_location(self) -> bool {
        !matches!(self, Family::Bernoulli)
    }

    pub fn check_param(self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: theta.len(),
            });
        }
        for (coordinate, &value) in theta.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::DomainViolation {
                    coordinate,
                    value,
                    reason: "parameters must be finite",
                });
            }
        }
        Ok(())
    }

    pub fn check_observation(self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        for (coordinate, &value) in x.iter().enumerate() {
            let ok = match self {
                Family::Bernoulli => value == 0.0 || value == 1.0,
                _ => value.is_finite(),
            };
            if !ok {
                return Err(Error::OutsideSupport { coordinate, value });
            }
        }
        Ok(())
    }

    // ---- exponential-family structure ----

    fn require_exponential(self) -> Result<()> {
        if self.is_exponential() {
            Ok(())
        } else {
            Err(Error::NotExponentialFamily(self.name()))
        }
    }

    /// `psi(theta)`.
    pub fn log_partition(self, theta: &[f64]) -> Result<f64> {
        self.require_exponential()?;
        self.check_param(theta)?;
        Ok(self.log_partition_unchecked(theta))
    }

    pub(crate) fn log_partition_unchecked(self, theta: &[f64]) -> f64 {
        match self {
            Family::Gaussian { .. } => 0.5 * theta.iter().map(|t| t * t).sum::<f64>(),
            Family::Bernoulli => softplus(theta[0]),
            Family::Laplace { .. } => f64::NAN,
        }
    }

    /// `grad psi(theta)`, the mean of the sufficient statistic.
    pub fn mean_statistic(self, theta: &[f64]) -> Result<Vec<f64>> {
        self.require_exponential()?;
        self.check_param(theta)?;
        Ok(match self {
            Family::Gaussian { .. } => theta.to_vec(),
            Family::Bernoulli => vec![logistic(theta[0])],
            Family::Laplace { .. } => unreachable!(),
        })
    }

    /// `phi(x)`; the identity for every built-in exponential family.
    pub fn sufficient_statistic(self, x: &[f64]) -> Result<Vec<f64>> {
        self.require_exponential()?;
        self.check_observation(x)?;
        Ok(x.to_vec())
    }

    /// `log r(x)`.
    pub fn carrier_log(self, x: &[f64]) -> Result<f64> {
        self.require_exponential()?;
        self.check_observation(x)?;
        Ok(self.carrier_log_unchecked(x))
    }

    pub(crate) fn carrier_log_unchecked(self, x: &[f64]) -> f64 {
        match self {
            Family::Gaussian { dim } => {
                -(dim as f64) * LN_SQRT_2PI - 0.5 * x.iter().map(|v| v * v).sum::<f64>()
            }
            Family::Bernoulli => 0.0,
            Family::Laplace { .. } => f64::NAN,
        }
    }

    /// `grad grad' psi(theta)`, equal to the covariance of `phi(X)` under `P_theta`.
    pub fn fisher_information(self, theta: &[f64]) -> Result<DMatrix<f64>> {
        if !self.is_exponential() {
            return Err(Error::NotDifferentiable(format!(
                "{} log-density is not twice differentiable in theta",
                self.name()
            )));
        }
        self.check_param(theta)?;
        Ok(self.hessian_unchecked(theta))
    }

    fn hessian_unchecked(self, theta: &[f64]) -> DMatrix<f64> {
        match self {
            Family::Gaussian { dim } => DMatrix::identity(dim, dim),
            Family::Bernoulli => DMatrix::from_element(1, 1, logistic_variance(theta[0])),
            Family::Laplace { dim } => DMatrix::from_element(dim, dim, f64::NAN),
        }
    }

    /// Cross-information `E_P grad grad' log(1/p_theta(X))` by central finite differences
    /// of the expected negative log-likelihood, with step `1e-4 (1 + |theta_j|)`.
    ///
    /// `truth` is the data-generating member `P`.
    pub fn fisher_cross_information(self, truth: &Member, theta: &[f64]) -> Result<DMatrix<f64>> {
        if !self.is_exponential() || !truth.family.is_exponential() {
            return Err(Error::NotDifferentiable(format!(
                "{} log-density is not twice differentiable in theta",
                if self.is_exponential() {
                    truth.family.name()
                } else {
                    self.name()
                }
            )));
        }
        if truth.family.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: truth.family.dim(),
            });
        }
        self.check_param(theta)?;
        // E_P[-log p_theta(X)] = -E log r(X) - theta . E_P phi + psi(theta); the first term
        // does not depend on theta and is dropped.
        let mean_phi = truth.family.mean_statistic(&truth.theta)?;
        let f = |t: &[f64]| -crate::numeric::dot(t, &mean_phi) + self.log_partition_unchecked(t);
        let d = self.dim();
        let h: Vec<f64> = theta.iter().map(|t| 1e-4 * (1.0 + t.abs())).collect();
        let mut m = DMatrix::zeros(d, d);
        let mut p = theta.to_vec();
        let f0 = f(theta);
        for i in 0..d {
            for j in 0..d {
                let v = if i == j {
                    p[i] = theta[i] + h[i];
                    let fp = f(&p);
                    p[i] = theta[i] - h[i];
                    let fm = f(&p);
                    p[i] = theta[i];
                    (fp - 2.0 * f0 + fm) / (h[i] * h[i])
                } else {
                    let mut eval = |si: f64, sj: f64| {
                        p[i] = theta[i] + si * h[i];
                        p[j] = theta[j] + sj * h[j];
                        let v = f(&p);
                        p[i] = theta[i];
                        p[j] = theta[j];
                        v
                    };
                    (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                        / (4.0 * h[i] * h[j])
                };
                m[(i, j)] = v;
            }
        }
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > 1e-8 {
            return Err(Error::NonSymmetric { asymmetry });
        }
        Ok(m)
    }

    /// Smallest and largest Hessian eigenvalue of `psi` over a mesh of the box
    /// (`CURVATURE_MESH` points per axis plus the corners).
    pub fn curvature_range(self, domain: &ParamBox) -> Result<(f64, f64)> {
        self.require_exponential()?;
        domain.check_dim(self.dim())?;
        if !domain.is_bounded() {
            return Err(invalid(
                "domain",
                "curvature extremes require a bounded box",
            ));
        }
        let (lo, hi) = match self {
            Family::Gaussian { .. } => (1.0, 1.0),
            Family::Bernoulli => {
                let (a, b) = (domain.lo[0], domain.hi[0]);
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for k in 0..CURVATURE_MESH {
                    let t = a + (b - a) * k as f64 / (CURVATURE_MESH - 1) as f64;
                    let v = logistic_variance(t);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                // The mesh includes both corners; the maximum may sit at 0 between nodes.
                if a <= 0.0 && b >= 0.0 {
                    hi = hi.max(0.25);
                }
                (lo, hi)
            }
            Family::Laplace { .. } => unreachable!(),
        };
        Ok((lo, hi))
    }

    /// `c = inf lambda_min(grad grad' psi) / 8` over the box, so that
    /// `A(P_a, P_b) <= exp(-c ||a - b||^2)` for `a`, `b` in the box.
    pub fn gaussian_decay_constant(self, domain: &ParamBox) -> Result<f64> {
        let (lo, _) = self.curvature_range(domain)?;
        if !(lo > 0.0) {
            return Err(Error::NonPositiveCurvature {
                infimum: lo,
                mesh_points: CURVATURE_MESH.pow(self.dim() as u32),
            });
        }
        Ok(lo / 8.0)
    }

    /// Supremum of the largest Hessian eigenvalue of `psi` over the ball `B(center, radius)`.
    pub fn max_curvature_on_ball(self, center: &[f64], radius: f64) -> Result<f64> {
        self.require_exponential()?;
        self.check_param(center)?;
        Ok(match self {
            Family::Gaussian { .. } => 1.0,
            Family::Bernoulli => {
                let t = center[0].abs() - radius;
                if t <= 0.0 {
                    0.25
                } else {
                    logistic_variance(t)
                }
            }
            Family::Laplace { .. } => unreachable!(),
        })
    }

    /// Constant `beta` with `min over grid of KL(P_theta || P_g) <= beta eps^2` for every
    /// `theta` within half a spacing per axis of its nearest grid point.
    pub fn kl_net_beta(self) -> f64 {
        match self {
            Family::Gaussian { dim } | Family::Laplace { dim } => dim as f64 / 8.0,
            // sup psi'' = 1/4, half spacing squared over 2.
            Family::Bernoulli => 1.0 / 32.0,
        }
    }

    // ---- densities and sampling ----

    pub fn log_density(self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.check_param(theta)?;
        self.check_observation(x)?;
        Ok(self.log_density_unchecked(theta, x))
    }

    pub(crate) fn log_density_unchecked(self, theta: &[f64], x: &[f64]) -> f64 {
        match self {
            Family::Gaussian { dim } => {
                -(dim as f64) * LN_SQRT_2PI - 0.5 * squared_distance(x, theta)
            }
            Family::Bernoulli => x[0] * theta[0] - softplus(theta[0]),
            Family::Laplace { dim } => {
                -(dim as f64) * LN_2 - x.iter().zip(theta).map(|(a, b)| (a - b).abs()).sum::<f64>()
            }
        }
    }

    /// Draws `n` iid observations from `P_theta` using `rng`.
    pub fn sample_with<R: Rng + ?Sized>(
        self,
        theta: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(invalid("n", "sample size must be at least 1"));
        }
        self.check_param(theta)?;
        let d = self.dim();
        let mut out = Vec::with_capacity(n * d);
        match self {
            Family::Gaussian { .. } => {
                for _ in 0..n {
                    for t in theta {
                        let z: f64 = rng.sample(StandardNormal);
                        out.push(t + z);
                    }
                }
            }
            Family::Bernoulli => {
                let p = logistic(theta[0]);
                for _ in 0..n {
                    let u: f64 = rng.random();
                    out.push(if u < p { 1.0 } else { 0.0 });
                }
            }
            Family::Laplace { .. } => {
                for _ in 0..n {
                    for t in theta {
                        let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                        out.push(t - u.signum() * (1.0 - 2.0 * u.abs()).ln());
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn sample(self, theta: &[f64], n: usize, seed: u64) -> Result<DataSample> {
        let mut rng = stream_rng(seed, 0);
        let values = self.sample_with(theta, n, &mut rng)?;
        DataSample::new(values, self.dim(), Some(seed))
    }

    /// Marginal CDF of coordinate `j` of `P_theta`.
    pub fn marginal_cdf(self, theta: &[f64], j: usize, x: f64) -> f64 {
        match self {
            Family::Gaussian { .. } => normal_cdf(x - theta[j]),
            Family::Laplace { .. } => laplace_cdf(x - theta[j]),
            Family::Bernoulli => {
                let p = logistic(theta[0]);
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
        }
    }

    /// Marginal density of coordinate `j` (location families only).
    pub fn marginal_density(self, theta: &[f64], j: usize, x: f64) -> Option<f64> {
        let z = x - theta[j];
        match self {
            Family::Gaussian { .. } => Some((-0.5 * z * z - LN_SQRT_2PI).exp()),
            Family::Laplace { .. } => Some(0.5 * (-z.abs()).exp()),
            Family::Bernoulli => None,
        }
    }

    /// Mean of `P_theta`.
    pub fn mean(self, theta: &[f64]) -> Vec<f64> {
        match self {
            Family::Bernoulli => vec![logistic(theta[0])],
            _ => theta.to_vec(),
        }
    }

    pub fn location_summary(self) -> Option<LocationSummary> {
        let dim = self.dim();
        let s = match self {
            Family::Gaussian { dim } => {
                let d = dim as f64;
                std::f64::consts::SQRT_2 * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
            }
            Family::Laplace { dim: 1 } => 1.0,
            // E sqrt(X^2 + Y^2) for independent unit Laplace coordinates.
            Family::Laplace { .. } => {
                1.0 + (1.0 + std::f64::consts::SQRT_2).ln() / std::f64::consts::SQRT_2
            }
            Family::Bernoulli => return None,
        };
        Some(LocationSummary {
            dim,
            first_central_moment: s,
            median_offset: vec![0.0; dim],
        })
    }

    // ---- divergences ----

    /// Jensen gap `(psi(a) + psi(b))/2 - psi((a+b)/2)` for exponential families.
    pub fn jensen_gap(self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.require_exponential()?;
        self.check_param(a)?;
        self.check_param(b)?;
        Ok(match self {
            Family::Gaussian { .. } => squared_distance(a, b) / 8.0,
            _ => {
                let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                let gap = 0.5 * (self.log_partition_unchecked(a) + self.log_partition_unchecked(b))
                    - self.log_partition_unchecked(&mid);
                gap.max(0.0)
            }
        })
    }

    /// Hellinger affinity `A(P_a, P_b)`: closed form for exponential families,
    /// quadrature otherwise.
    pub fn hellinger_affinity(self, a: &[f64], b: &[f64]) -> Result<f64> {
        Ok((-0.5 * self.bhattacharyya(a, b)?).exp())
    }

    /// Bhattacharyya divergence `2 log(1/A)`.
    pub fn bhattacharyya(self, a: &[f64], b: &[f64]) -> Result<f64> {
        if self.is_exponential() {
            return Ok(2.0 * self.jensen_gap(a, b)?);
        }
        self.check_param(a)?;
        self.check_param(b)?;
        let mut total = 0.0;
        for j in 0..self.dim() {
            let est = self.marginal_affinity_quadrature(a[j], b[j])?;
            total += -2.0 * est.value.min(1.0).ln();
        }
        Ok(total.max(0.0))
    }

    /// Squared Hellinger distance `2 (1 - A)`.
    pub fn squared_hellinger(self, a: &[f64], b: &[f64]) -> Result<f64> {
        Ok(2.0 * (1.0 - self.hellinger_affinity(a, b)?))
    }

    /// `KL(P_a || P_b)`.
    pub fn kl_divergence(self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_param(a)?;
        self.check_param(b)?;
        Ok(match self {
            Family::Gaussian { .. } => 0.5 * squared_distance(a, b),
            Family::Bernoulli => {
                let (s, t) = (a[0], b[0]);
                (softplus(t) - softplus(s) - (t - s) * logistic(s)).max(0.0)
            }
            Family::Laplace { .. } => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = (x - y).abs();
                    (-d).exp_m1() + d
                })
                .sum(),
        })
    }

    /// Affinity of one coordinate marginal by adaptive quadrature over the real line,
    /// split at both centers.
    fn marginal_affinity_quadrature(self, a: f64, b: f64) -> Result<Estimate> {
        let spec = IntegrationSpec::real_line().with_breakpoints([a, b]);
        let lp = move |x: f64| self.marginal_log_density(a, x);
        let lq = move |x: f64| self.marginal_log_density(b, x);
        quadrature_affinity(lp, lq, &spec)
    }

    fn marginal_log_density(self, t: f64, x: f64) -> f64 {
        let z = x - t;
        match self {
            Family::Gaussian { .. } => -0.5 * z * z - LN_SQRT_2PI,
            Family::Laplace { .. } => -LN_2 - z.abs(),
            Family::Bernoulli => f64::NAN,
        }
    }

    /// Affinity computed without the exponential-family closed form: per-coordinate
    /// quadrature for location families, an exact sum over `{0, 1}` for Bernoulli.
    pub fn affinity_by_quadrature(self, a: &[f64], b: &[f64]) -> Result<Estimate> {
        self.check_param(a)?;
        self.check_param(b)?;
        match self {
            Family::Bernoulli => {
                let value = [0.0, 1.0]
                    .iter()
                    .map(|&x| {
                        (0.5 * (self.log_density_unchecked(a, &[x])
                            + self.log_density_unchecked(b, &[x])))
                        .exp()
                    })
                    .sum();
                Ok(Estimate {
                    value,
                    abs_error: 0.0,
                })
            }
            _ => {
                let mut value = 1.0;
                let mut abs_error = 0.0;
                for j in 0..self.dim() {
                    let est = self.marginal_affinity_quadrature(a[j], b[j])?;
                    abs_error += est.abs_error * value;
                    value *= est.value;
                }
                Ok(Estimate { value, abs_error })
            }
        }
    }
}

/// `int sqrt(p q)` for two log-densities on the real line.
pub fn quadrature_affinity<P, Q>(p_log: P, q_log: Q, spec: &IntegrationSpec) -> Result<Estimate>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    integrate(
        |x| {
            let s = 0.5 * (p_log(x) + q_log(x));
            if s == f64::NEG_INFINITY {
                0.0
            } else {
                s.exp()
            }
        },
        spec,
    )
}

/// Extreme eigenvalues of a symmetric matrix, `(lambda_min, lambda_max)`.
pub fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G1: Family = Family::Gaussian { dim: 1 };
    const L1: Family = Family::Laplace { dim: 1 };

    #[test]
    fn log_density_examples() {
        assert!((G1.log_density(&[0.0], &[0.0]).unwrap() + 0.918_938_533_204_672_8).abs() < 1e-15);
        assert!((L1.log_density(&[0.0], &[1.0]).unwrap() + 1.693_147_180_559_945).abs() < 1e-14);
        let e = G1.log_density(&[f64::NAN], &[0.0]).unwrap_err();
        assert!(matches!(e, Error::DomainViolation { coordinate: 0, .. }));
        let e = Family::Bernoulli.log_density(&[0.0], &[0.5]).unwrap_err();
        assert!(matches!(e, Error::OutsideSupport { .. }));
    }

    #[test]
    fn exponential_form_matches_density() {
        for fam in [G1, Family::Gaussian { dim: 2 }, Family::Bernoulli] {
            let theta: Vec<f64> = (0..fam.dim()).map(|j| 0.3 + j as f64).collect();
            let x: Vec<f64> = (0..fam.dim()).map(|j| (j % 2) as f64).collect();
            let direct = fam.log_density(&theta, &x).unwrap();
            let ef = fam.carrier_log(&x).unwrap()
                + crate::numeric::dot(&theta, &fam.sufficient_statistic(&x).unwrap())
                - fam.log_partition(&theta).unwrap();
            assert!((direct - ef).abs() < 1e-13);
        }
        assert_eq!(G1.log_partition(&[3.0]).unwrap(), 4.5);
        assert!(L1.log_partition(&[0.0]).is_err());
    }

    #[test]
    fn affinity_examples() {
        assert!((G1.hellinger_affinity(&[0.0], &[2.0]).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((G1.bhattacharyya(&[0.0], &[2.0]).unwrap() - 1.0).abs() < 1e-15);
        let a = L1.hellinger_affinity(&[0.0], &[1.0]).unwrap();
        assert!((a - 0.909_795_989_568_950_1).abs() < 1e-9);
        let a = L1.affinity_by_quadrature(&[0.0], &[8.0]).unwrap();
        assert!((a.value - 0.091_578_194_443_670_9).abs() < 1e-10);
        assert_eq!(L1.hellinger_affinity(&[0.7], &[0.7]).unwrap(), 1.0);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(G1.kl_divergence(&[0.0], &[2.0]).unwrap(), 2.0);
        assert_eq!(G1.kl_divergence(&[1.0], &[1.0]).unwrap(), 0.0);
        let k = L1.kl_divergence(&[0.0], &[1.0]).unwrap();
        assert!((k - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn decay_constants() {
        let unit = ParamBox::new(vec![-1.0], vec![1.0]).unwrap();
        assert_eq!(G1.gaussian_decay_constant(&unit).unwrap(), 0.125);
        let c = Family::Bernoulli.gaussian_decay_constant(&unit).unwrap();
        assert!((c - 0.024_576_491_655_185_23).abs() < 1e-15);
        let open = ParamBox::new(vec![f64::NEG_INFINITY], vec![1.0]).unwrap();
        assert!(Family::Bernoulli.gaussian_decay_constant(&open).is_err());
        assert!(L1.gaussian_decay_constant(&unit).is_err());
    }

    #[test]
    fn cross_information_matches_closed_form() {
        let truth = Member::new(Family::Bernoulli, vec![0.4]).unwrap();
        for t in [-2.0, 0.0, 1.5] {
            let fd = Family::Bernoulli
                .fisher_cross_information(&truth, &[t])
                .unwrap();
            let exact = Family::Bernoulli.fisher_information(&[t]).unwrap();
            assert!((fd[(0, 0)] - exact[(0, 0)]).abs() < 1e-5);
        }
        let g2 = Family::Gaussian { dim: 2 };
        let truth = Member::new(g2, vec![1.0, -2.0]).unwrap();
        let fd = g2.fisher_cross_information(&truth, &[0.3, 0.1]).unwrap();
        assert!((fd - DMatrix::<f64>::identity(2, 2)).amax() < 1e-5);
        assert!(L1.fisher_information(&[0.0]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_rejects_zero() {
        let a = L1.sample(&[2.0], 50, 11).unwrap();
        let b = L1.sample(&[2.0], 50, 11).unwrap();
        assert_eq!(a, b);
        assert!(G1.sample(&[0.0], 0, 1).is_err());
    }
}
