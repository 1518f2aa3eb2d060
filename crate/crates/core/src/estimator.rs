//! Penalties, Kraft-like sums and the penalized maximum-likelihood estimator over a
//! finite grid.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{EpsGrid, GridPoints};
use crate::models::{DataSample, Family, Member};
use crate::numeric::{dot, log_sum_exp, squared_distance, squared_norm, CompensatedSum};

/// Tolerance on `sum q = 1` for codelength penalties.
pub const PMF_TOL: f64 = 1e-12;

/// Whether a codelength penalty is `2 log(1/q)` or `log(1/q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodelengthMode {
    /// `2 log(1/q)`; satisfies the twice-Kraft condition with equality.
    Twice,
    /// `log(1/q)`, the MAP estimator for prior `q`.
    Map,
}

/// Penalty on grid points. Per-point data (`pmf`, `values`) follows grid enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Penalty {
    Zero,
    Constant {
        value: f64,
    },
    /// `||theta||^2`
    SquaredNorm,
    Codelength {
        pmf: Vec<f64>,
        mode: CodelengthMode,
    },
    Table {
        values: Vec<f64>,
    },
}

impl Penalty {
    pub fn uniform_codelength(m: usize, mode: CodelengthMode) -> Self {
        Penalty::Codelength {
            pmf: vec![1.0 / m as f64; m],
            mode,
        }
    }

    /// Penalty at every grid point.
    pub fn values(&self, points: &GridPoints) -> Result<Vec<f64>> {
        let m = points.len();
        match self {
            Penalty::Zero => Ok(vec![0.0; m]),
            Penalty::Constant { value } => {
                if value.is_nan() {
                    return Err(Error::InvalidPenalty("constant penalty is NaN".into()));
                }
                Ok(vec![*value; m])
            }
            Penalty::SquaredNorm => Ok(points.iter().map(squared_norm).collect()),
            Penalty::Codelength { pmf, mode } => {
                check_pmf(pmf, m)?;
                let k = match mode {
                    CodelengthMode::Twice => 2.0,
                    CodelengthMode::Map => 1.0,
                };
                Ok(pmf.iter().map(|q| -k * q.ln()).collect())
            }
            Penalty::Table { values } => {
                if values.len() != m {
                    return Err(Error::InvalidPenalty(format!(
                        "table has {} entries for {m} grid points",
                        values.len()
                    )));
                }
                if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                    return Err(Error::InvalidPenalty(
                        "table entries must be > -inf and not NaN".into(),
                    ));
                }
                Ok(values.clone())
            }
        }
    }

    /// Largest Hessian eigenvalue of the penalty, where it is twice differentiable.
    pub fn max_hessian_eigenvalue(&self) -> Result<f64> {
        match self {
            Penalty::Zero | Penalty::Constant { .. } => Ok(0.0),
            Penalty::SquaredNorm => Ok(2.0),
            _ => Err(Error::NotDifferentiable(
                "grid-indexed penalties have no Hessian off the grid".into(),
            )),
        }
    }

    /// Penalty at an arbitrary parameter, where it is defined off the grid.
    pub fn value_at(&self, theta: &[f64]) -> Result<f64> {
        match self {
            Penalty::Zero => Ok(0.0),
            Penalty::Constant { value } => Ok(*value),
            Penalty::SquaredNorm => Ok(squared_norm(theta)),
            _ => Err(Error::InvalidPenalty(
                "grid-indexed penalties are only defined on grid points".into(),
            )),
        }
    }
}

fn check_pmf(pmf: &[f64], m: usize) -> Result<()> {
    if pmf.len() != m {
        return Err(Error::InvalidPenalty(format!(
            "pmf has {} entries for {m} grid points",
            pmf.len()
        )));
    }
    if pmf.iter().any(|q| !(*q >= 0.0 && *q <= 1.0)) {
        return Err(Error::InvalidPenalty(
            "pmf entries must lie in [0, 1]".into(),
        ));
    }
    let total: f64 = pmf.iter().copied().collect::<CompensatedSum>().value();
    if (total - 1.0).abs() > PMF_TOL {
        return Err(Error::InvalidPenalty(format!("pmf sums to {total}, not 1")));
    }
    Ok(())
}

/// Pseudo-penalty `L`; it enters certificates only, never the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PseudoPenalty {
    Zero,
    /// `L(theta) = alpha n D_B(P, P_theta)`.
    AlphaBhattacharyya {
        alpha: f64,
        n: usize,
        reference: Member,
    },
    /// `L(theta) = 2 log(1/q(theta))` for the pmf `q` of the estimator.
    EntropyCodelength {
        pmf: Vec<f64>,
    },
    /// `L(theta) = alpha ||theta - center||^2`.
    Quadratic {
        alpha: f64,
        center: Vec<f64>,
    },
    /// `L = alpha * penalty`.
    AlphaTimesPenalty {
        alpha: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

impl PseudoPenalty {
    pub fn values(&self, points: &GridPoints, penalty: &[f64]) -> Result<Vec<f64>> {
        let m = points.len();
        match self {
            PseudoPenalty::Zero => Ok(vec![0.0; m]),
            PseudoPenalty::AlphaBhattacharyya {
                alpha,
                n,
                reference,
            } => {
                if !(*alpha >= 0.0 && *alpha <= 1.0) {
                    return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
                }
                let fam = reference.family;
                points
                    .iter()
                    .map(|t| Ok(alpha * *n as f64 * fam.bhattacharyya(&reference.theta, t)?))
                    .collect()
            }
            PseudoPenalty::EntropyCodelength { pmf } => {
                check_pmf(pmf, m)?;
                Ok(pmf.iter().map(|q| -2.0 * q.ln()).collect())
            }
            PseudoPenalty::Quadratic { alpha, center } => {
                if !(*alpha >= 0.0) {
                    return Err(invalid(
                        "alpha",
                        format!("must be non-negative, got {alpha}"),
                    ));
                }
                if center.len() != points.dim {
                    return Err(Error::DimensionMismatch {
                        expected: points.dim,
                        found: center.len(),
                    });
                }
                Ok(points
                    .iter()
                    .map(|t| alpha * squared_distance(t, center))
                    .collect())
            }
            PseudoPenalty::AlphaTimesPenalty { alpha } => {
                if !(*alpha >= 0.0) {
                    return Err(invalid(
                        "alpha",
                        format!("must be non-negative, got {alpha}"),
                    ));
                }
                if penalty.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: penalty.len(),
                    });
                }
                Ok(penalty.iter().map(|v| alpha * v).collect())
            }
            PseudoPenalty::Table { values } => {
                if values.len() != m {
                    return Err(Error::InvalidPenalty(format!(
                        "pseudo-penalty table has {} entries for {m} grid points",
                        values.len()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KraftSum {
    pub value: f64,
    pub log_value: f64,
    /// `value <= 1` (up to 1e-12 rounding).
    pub twice_kraft_ok: bool,
}

impl KraftSum {
    pub fn from_log(log_value: f64) -> Self {
        let value = log_value.exp();
        Self {
            value,
            log_value,
            twice_kraft_ok: log_value <= 1e-12,
        }
    }
}

/// `sum exp(-(penalty + pseudo)/2)` over paired per-point values.
pub fn kraft_sum_values(penalty: &[f64], pseudo: Option<&[f64]>) -> Result<KraftSum> {
    if let Some(l) = pseudo {
        if l.len() != penalty.len() {
            return Err(Error::DimensionMismatch {
                expected: penalty.len(),
                found: l.len(),
            });
        }
    }
    let exps: Vec<f64> = penalty
        .iter()
        .enumerate()
        .map(|(i, v)| -0.5 * (v + pseudo.map_or(0.0, |l| l[i])))
        .collect();
    if exps.iter().any(|e| e.is_nan()) {
        return Err(Error::InvalidPenalty(
            "penalty or pseudo-penalty is NaN".into(),
        ));
    }
    Ok(KraftSum::from_log(log_sum_exp(&exps)))
}

/// `sum over the grid of exp(-(L(theta) + pseudo(theta))/2)`.
pub fn kraft_sum(
    grid: &EpsGrid,
    penalty: &Penalty,
    pseudo: Option<&PseudoPenalty>,
) -> Result<KraftSum> {
    let points = grid.enumerate_points()?;
    let pen = penalty.values(&points)?;
    let l = pseudo.map(|p| p.values(&points, &pen)).transpose()?;
    kraft_sum_values(&pen, l.as_deref())
}

/// Penalty shifted by `2 log z` so that its Kraft sum is exactly one.
pub fn equivalent_twice_kraft_penalty(penalty: &[f64]) -> Result<Vec<f64>> {
    let k = kraft_sum_values(penalty, None)?;
    if !k.log_value.is_finite() {
        return Err(Error::InvalidPenalty(
            "Kraft sum is zero or infinite".into(),
        ));
    }
    Ok(penalty.iter().map(|v| v + 2.0 * k.log_value).collect())
}

/// Result of a penalized fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    /// Index of the selected point in grid enumeration order.
    pub ordinal: usize,
    pub theta: Vec<f64>,
    /// `-sum_i log p_theta(x_i) + L(theta)` at the selected point.
    pub objective: f64,
}

/// Penalized MLE over an enumerated grid.
///
/// Ties are broken toward the smaller enumeration ordinal, which is the
/// lexicographically smaller lattice index for points from [`EpsGrid`].
#[derive(Debug, Clone)]
pub struct PenalizedMle {
    family: Family,
    points: GridPoints,
    penalty: Vec<f64>,
    /// `psi(theta)` per point for exponential families.
    log_partition: Option<Vec<f64>>,
}

impl PenalizedMle {
    pub fn new(family: Family, grid: &EpsGrid, penalty: &Penalty) -> Result<Self> {
        let points = grid.enumerate_points()?;
        let values = penalty.values(&points)?;
        Self::from_points(family, points, values)
    }

    pub fn from_points(family: Family, points: GridPoints, penalty: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if points.dim != family.dim() {
            return Err(Error::DimensionMismatch {
                expected: family.dim(),
                found: points.dim,
            });
        }
        if penalty.len() != points.len() {
            return Err(Error::InvalidPenalty(format!(
                "{} penalty values for {} grid points",
                penalty.len(),
                points.len()
            )));
        }
        for p in points.iter() {
            family.check_param(p)?;
        }
        let log_partition = family.is_exponential().then(|| {
            points
                .iter()
                .map(|t| family.log_partition_unchecked(t))
                .collect()
        });
        Ok(Self {
            family,
            points,
            penalty,
            log_partition,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn points(&self) -> &GridPoints {
        &self.points
    }

    pub fn penalty(&self) -> &[f64] {
        &self.penalty
    }

    /// Penalized negative log-likelihood at every grid point.
    pub fn objectives(&self, data: &DataSample) -> Result<Vec<f64>> {
        if data.dim != self.family.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.family.dim(),
                found: data.dim,
            });
        }
        for x in data.points() {
            self.family.check_observation(x)?;
        }
        let n = data.len() as f64;
        let d = data.dim;
        let out = match &self.log_partition {
            Some(psi) => {
                // -log p_theta(x) = -log r(x) - theta . x + psi(theta)
                let carrier: f64 = data
                    .points()
                    .map(|x| self.family.carrier_log_unchecked(x))
                    .collect::<CompensatedSum>()
                    .value();
                let stat: Vec<f64> = (0..d)
                    .map(|j| {
                        data.points()
                            .map(|x| x[j])
                            .collect::<CompensatedSum>()
                            .value()
                    })
                    .collect();
                self.points
                    .iter()
                    .zip(psi)
                    .zip(&self.penalty)
                    .map(|((t, p), pen)| -carrier - dot(t, &stat) + n * p + pen)
                    .collect()
            }
            None => self
                .points
                .iter()
                .zip(&self.penalty)
                .map(|(t, pen)| {
                    let nll: f64 = data
                        .points()
                        .map(|x| -self.family.log_density_unchecked(t, x))
                        .collect::<CompensatedSum>()
                        .value();
                    nll + pen
                })
                .collect(),
        };
        Ok(out)
    }

    pub fn fit(&self, data: &DataSample) -> Result<Fit> {
        let obj = self.objectives(data)?;
        let ordinal = argmin_first(&obj).ok_or(Error::NoFiniteObjective)?;
        Ok(Fit {
            ordinal,
            theta: self.points.point(ordinal).to_vec(),
            objective: obj[ordinal],
        })
    }
}

/// Smallest non-NaN value below `+inf`, first occurrence on ties.
fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() || v == f64::INFINITY {
            continue;
        }
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Model-index penalty `L0(k) = k sqrt 2 + 2 log S_k`, `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptivePenalty {
    pub l0: Vec<f64>,
    pub per_model_sums: Vec<f64>,
    /// `sum_k exp(-L0(k)/2) S_k = sum_k exp(-k / sqrt 2)`.
    pub total: f64,
    pub twice_kraft_ok: bool,
}

/// `sum_{k >= 1} exp(-k / sqrt 2)`, the limit of [`AdaptivePenalty::total`].
pub fn adaptive_series_limit() -> f64 {
    let r = (-std::f64::consts::FRAC_1_SQRT_2).exp();
    r / (1.0 - r)
}

pub fn build_adaptive_penalty(per_model_sums: &[f64]) -> Result<AdaptivePenalty> {
    if per_model_sums.is_empty() {
        return Err(invalid("per_model_sums", "at least one model is required"));
    }
    let mut l0 = Vec::with_capacity(per_model_sums.len());
    let mut total = CompensatedSum::new();
    for (i, &s) in per_model_sums.iter().enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(
                "per_model_sums",
                format!("S_{} = {s} must be positive and finite", i + 1),
            ));
        }
        let k = (i + 1) as f64;
        let l = k * std::f64::consts::SQRT_2 + 2.0 * s.ln();
        total.add((-0.5 * l).exp() * s);
        l0.push(l);
    }
    let total = total.value();
    Ok(AdaptivePenalty {
        l0,
        per_model_sums: per_model_sums.to_vec(),
        total,
        twice_kraft_ok: total <= 1.0,
    })
}

/// A class of grids for one family with a model-index penalty.
#[derive(Debug, Clone)]
pub struct AdaptiveClass {
    models: Vec<PenalizedMle>,
    pub penalty: AdaptivePenalty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveFit {
    /// Selected model, 1-based.
    pub model: usize,
    pub fit: Fit,
}

impl AdaptiveClass {
    /// `S_k` is the Kraft sum of model `k` with its own penalty (and pseudo-penalty, if any).
    pub fn new(
        family: Family,
        models: &[(EpsGrid, Penalty)],
        pseudo: Option<&PseudoPenalty>,
    ) -> Result<Self> {
        let mut fitted = Vec::with_capacity(models.len());
        let mut sums = Vec::with_capacity(models.len());
        for (grid, penalty) in models {
            let mle = PenalizedMle::new(family, grid, penalty)?;
            let l = pseudo
                .map(|p| p.values(mle.points(), mle.penalty()))
                .transpose()?;
            sums.push(kraft_sum_values(mle.penalty(), l.as_deref())?.value);
            fitted.push(mle);
        }
        let penalty = build_adaptive_penalty(&sums)?;
        Ok(Self {
            models: fitted,
            penalty,
        })
    }

    pub fn models(&self) -> &[PenalizedMle] {
        &self.models
    }

    /// Minimizes `-log likelihood + L0(k) + L_k(theta)` jointly; ties go to the smaller
    /// model index, then the smaller ordinal.
    pub fn fit(&self, data: &DataSample) -> Result<AdaptiveFit> {
        let mut best: Option<AdaptiveFit> = None;
        for (k, mle) in self.models.iter().enumerate() {
            let mut fit = match mle.fit(data) {
                Ok(f) => f,
                Err(Error::NoFiniteObjective) => continue,
                Err(e) => return Err(e),
            };
            fit.objective += self.penalty.l0[k];
            if best
                .as_ref()
                .is_none_or(|b| fit.objective < b.fit.objective)
            {
                best = Some(AdaptiveFit { model: k + 1, fit });
            }
        }
        best.ok_or(Error::NoFiniteObjective)
    }
}
