//! Risk certificates: upper bounds on the expected Bhattacharyya loss of the
//! penalized MLE, each carrying its component breakdown and assumption ledger.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, precondition, Error, Result};
use crate::estimator::{kraft_sum_values, CodelengthMode, Penalty, PseudoPenalty};
use crate::grid::{gaussian_sum_bound, EpsGrid, GridPoints, ParamBox};
use crate::models::{Family, Member};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    /// Arbitrary penalty and pseudo-penalty.
    General,
    /// General bound with the penalty moved out of the summation.
    SubtractPenalty,
    /// Pseudo-penalty `alpha D_B`, penalty kept in the sum.
    BhattacharyyaPseudo,
    /// Pseudo-penalty `alpha D_B`, penalty subtracted.
    BhattacharyyaMinusPenalty,
    GaussianDecay,
    GaussianDecayConcrete,
    Minimax,
    MixedRegime,
    SquaredNorm,
    Entropy,
    Quadratic,
    PenaltyPseudo,
    Map,
}

impl TheoremId {
    pub const ALL: [TheoremId; 13] = [
        TheoremId::General,
        TheoremId::SubtractPenalty,
        TheoremId::BhattacharyyaPseudo,
        TheoremId::BhattacharyyaMinusPenalty,
        TheoremId::GaussianDecay,
        TheoremId::GaussianDecayConcrete,
        TheoremId::Minimax,
        TheoremId::MixedRegime,
        TheoremId::SquaredNorm,
        TheoremId::Entropy,
        TheoremId::Quadratic,
        TheoremId::PenaltyPseudo,
        TheoremId::Map,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::General => "general",
            TheoremId::SubtractPenalty => "subtract-penalty",
            TheoremId::BhattacharyyaPseudo => "bhattacharyya-pseudo",
            TheoremId::BhattacharyyaMinusPenalty => "bhattacharyya-minus-penalty",
            TheoremId::GaussianDecay => "gaussian-decay",
            TheoremId::GaussianDecayConcrete => "gaussian-decay-concrete",
            TheoremId::Minimax => "minimax",
            TheoremId::MixedRegime => "mixed-regime",
            TheoremId::SquaredNorm => "squared-norm",
            TheoremId::Entropy => "entropy",
            TheoremId::Quadratic => "quadratic",
            TheoremId::PenaltyPseudo => "penalty-pseudo",
            TheoremId::Map => "map",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an expectation such as `E L(theta_hat)` came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Source {
    Exact,
    AnalyticBound,
    MonteCarlo { stderr: f64, reps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    pub source: Source,
}

impl Expectation {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            source: Source::Exact,
        }
    }

    pub fn bound(value: f64) -> Self {
        Self {
            value,
            source: Source::AnalyticBound,
        }
    }

    pub fn monte_carlo(value: f64, stderr: f64, reps: usize) -> Self {
        Self {
            value,
            source: Source::MonteCarlo { stderr, reps },
        }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    fn is_empirical(&self) -> bool {
        matches!(self.source, Source::MonteCarlo { .. })
    }

    fn source_label(&self) -> &'static str {
        match self.source {
            Source::Exact => "exact",
            Source::AnalyticBound => "analytic bound",
            Source::MonteCarlo { .. } => "monte carlo estimate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssumptionStatus {
    /// Verified numerically by this library.
    Checked,
    /// Stated by the caller; not verifiable here.
    AssertedByCaller,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption {
    pub name: String,
    pub status: AssumptionStatus,
}

/// Bound on `E D_B(P, P_theta_hat)`.
///
/// `value = scale * sum(components)`; the sum runs over `components` in key order
/// with compensated addition, so [`BoundCertificate::reassemble`] reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub theorem_id: TheoremId,
    pub value: f64,
    pub scale: f64,
    pub components: BTreeMap<String, f64>,
    pub assumptions: Vec<Assumption>,
    pub params: BTreeMap<String, Value>,
    /// Some expectation in the bound is a Monte Carlo estimate.
    pub empirical: bool,
    /// The value is finite.
    pub informative: bool,
}

impl BoundCertificate {
    pub fn reassemble(&self) -> f64 {
        self.scale * sum_components(&self.components)
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.get(name).copied()
    }

    pub fn assumption(&self, name: &str) -> Option<AssumptionStatus> {
        self.assumptions
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.status)
    }
}

fn sum_components(c: &BTreeMap<String, f64>) -> f64 {
    let mut s = CompensatedSum::new();
    for v in c.values() {
        if v.is_infinite() {
            return *v;
        }
        s.add(*v);
    }
    s.value()
}

struct Builder {
    theorem_id: TheoremId,
    scale: f64,
    components: BTreeMap<String, f64>,
    assumptions: Vec<Assumption>,
    params: BTreeMap<String, Value>,
    empirical: bool,
}

impl Builder {
    fn new(theorem_id: TheoremId) -> Self {
        Self {
            theorem_id,
            scale: 1.0,
            components: BTreeMap::new(),
            assumptions: vec![
                Assumption {
                    name: "observations iid from P".into(),
                    status: AssumptionStatus::AssertedByCaller,
                },
                Assumption {
                    name: "penalty does not depend on the data".into(),
                    status: AssumptionStatus::AssertedByCaller,
                },
            ],
            params: BTreeMap::new(),
            empirical: false,
        }
    }

    fn scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    fn component(mut self, name: &str, v: f64) -> Self {
        self.components.insert(name.into(), v);
        self
    }

    fn checked(mut self, name: impl Into<String>) -> Self {
        self.assumptions.push(Assumption {
            name: name.into(),
            status: AssumptionStatus::Checked,
        });
        self
    }

    fn asserted(mut self, name: impl Into<String>) -> Self {
        self.assumptions.push(Assumption {
            name: name.into(),
            status: AssumptionStatus::AssertedByCaller,
        });
        self
    }

    fn param(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.params.insert(name.into(), v.into());
        self
    }

    /// Records an expectation and its provenance.
    fn expectation(mut self, name: &str, e: &Expectation) -> Self {
        self.empirical |= e.is_empirical();
        self.params.insert(name.into(), json!(e));
        let status = match e.source {
            Source::Exact | Source::AnalyticBound => AssumptionStatus::AssertedByCaller,
            Source::MonteCarlo { .. } => AssumptionStatus::Checked,
        };
        self.assumptions.push(Assumption {
            name: format!("{name} is {}", e.source_label()),
            status,
        });
        self
    }

    fn build(self) -> BoundCertificate {
        let value = self.scale * sum_components(&self.components);
        BoundCertificate {
            theorem_id: self.theorem_id,
            value,
            scale: self.scale,
            components: self.components,
            assumptions: self.assumptions,
            params: self.params,
            empirical: self.empirical,
            informative: value.is_finite(),
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn sample_size(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(n as f64)
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

// ---- resolvability ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolvability {
    /// `min over the grid of KL(P || P_theta) + L(theta)/n`; `+inf` if no grid point has finite KL.
    pub value: f64,
    pub minimizer: Option<Vec<f64>>,
    pub ordinal: Option<usize>,
    /// `KL(P || P_theta)` at the minimizer.
    pub divergence: f64,
    pub diagnostic: Option<String>,
}

/// Index of resolvability over an enumerated grid. Ties go to the smaller ordinal.
pub fn resolvability_index(
    grid: &EpsGrid,
    penalty: &Penalty,
    truth: &Member,
    n: usize,
) -> Result<Resolvability> {
    let points = grid.enumerate_points()?;
    let values = penalty.values(&points)?;
    resolvability_over_points(&points, &values, truth, n)
}

pub fn resolvability_over_points(
    points: &GridPoints,
    penalty: &[f64],
    truth: &Member,
    n: usize,
) -> Result<Resolvability> {
    let nf = sample_size(n)?;
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if points.dim != truth.family.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.family.dim(),
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
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, t) in points.iter().enumerate() {
        let kl = truth.family.kl_divergence(&truth.theta, t)?;
        let v = kl + penalty[i] / nf;
        if !v.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b, _)| v < b) {
            best = Some((i, v, kl));
        }
    }
    Ok(match best {
        Some((i, v, kl)) => Resolvability {
            value: v,
            minimizer: Some(points.point(i).to_vec()),
            ordinal: Some(i),
            divergence: kl,
            diagnostic: None,
        },
        None => Resolvability {
            value: f64::INFINITY,
            minimizer: None,
            ordinal: None,
            divergence: f64::INFINITY,
            diagnostic: Some("KL divergence or penalty is infinite at every grid point".into()),
        },
    })
}

/// Upper bound on the resolvability index from a single point `theta` in the convex
/// hull of the grid:
/// `KL(P || P_theta) + L(theta)/n + (eps^2 d / 2) sup_{B(theta, eps sqrt d)} lambda_1(I + Hess L / n)_+`.
///
/// The penalty must have a constant Hessian (zero, constant or squared norm).
pub fn resolvability_taylor_bound(
    truth: &Member,
    theta: &[f64],
    penalty: &Penalty,
    eps: f64,
    n: usize,
) -> Result<f64> {
    positive("eps", eps)?;
    let nf = sample_size(n)?;
    let fam = truth.family;
    let d = fam.dim() as f64;
    let kl = fam.kl_divergence(&truth.theta, theta)?;
    let curvature = fam.max_curvature_on_ball(theta, eps * d.sqrt())?;
    let pen_curv = penalty.max_hessian_eigenvalue()?;
    let lambda = (curvature + pen_curv / nf).max(0.0);
    Ok(kl + penalty.value_at(theta)? / nf + 0.5 * eps * eps * d * lambda)
}

// ---- general theorem ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMode {
    /// `2 log sum exp(-(L + pseudo)/2) + E pseudo`
    Add,
    /// `2 log sum exp(-pseudo/2) + E pseudo - E L`
    Subtract,
}

/// The general certificate for arbitrary per-point penalty and pseudo-penalty values.
pub fn general_certificate_values(
    penalty: &[f64],
    pseudo: &[f64],
    e_pseudo: Expectation,
    e_penalty: Option<Expectation>,
    resolvability: f64,
    n: usize,
    mode: CombineMode,
) -> Result<BoundCertificate> {
    let nf = sample_size(n)?;
    let (id, log_sum) = match mode {
        CombineMode::Add => (TheoremId::General, kraft_sum_values(penalty, Some(pseudo))?),
        CombineMode::Subtract => {
            if pseudo.len() != penalty.len() {
                return Err(Error::DimensionMismatch {
                    expected: penalty.len(),
                    found: pseudo.len(),
                });
            }
            (TheoremId::SubtractPenalty, kraft_sum_values(pseudo, None)?)
        }
    };
    let mut b = Builder::new(id)
        .asserted("pseudo-penalty does not depend on the data")
        .checked("penalized likelihood attains its minimum (finite grid)")
        .component("resolvability", resolvability)
        .component("log-sum", 2.0 * log_sum.log_value / nf)
        .component("pseudo-penalty-expectation", e_pseudo.value / nf)
        .expectation("E L(theta_hat)", &e_pseudo)
        .param("n", n)
        .param("grid_points", penalty.len())
        .param("kraft_sum", log_sum.value)
        .param("mode", json!(mode));
    if mode == CombineMode::Subtract {
        let ep = e_penalty
            .ok_or_else(|| invalid("e_penalty", "subtract mode needs E penalty(theta_hat)"))?;
        b = b
            .component("penalty-expectation", -ep.value / nf)
            .expectation("E penalty(theta_hat)", &ep);
    }
    Ok(b.build())
}

/// [`general_certificate_values`] on an enumerated grid.
#[allow(clippy::too_many_arguments)]
pub fn general_certificate(
    points: &GridPoints,
    penalty: &Penalty,
    pseudo: &PseudoPenalty,
    e_pseudo: Expectation,
    e_penalty: Option<Expectation>,
    resolvability: f64,
    n: usize,
    mode: CombineMode,
) -> Result<BoundCertificate> {
    let pen = penalty.values(points)?;
    let l = pseudo.values(points, &pen)?;
    general_certificate_values(&pen, &l, e_pseudo, e_penalty, resolvability, n, mode)
}

// ---- alpha D_B pseudo-penalty ----

/// How `sum A(P, P_theta)^(alpha n) [exp(-L/2)]` is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum AffinitySum<'a> {
    /// Affinities from the closed form for a built-in family.
    Exact { truth: &'a Member },
    /// Caller-supplied affinities, one per grid point.
    Table(&'a [f64]),
    /// `A <= exp(-c ||theta - theta*||^2)` with the off-center lattice bound; needs `L >= 0`.
    GaussianEnvelope { c: f64, eps: f64 },
}

/// Penalty kept inside the affinity sum or subtracted as `E L(theta_hat)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyMode {
    With,
    Without,
}

#[allow(clippy::too_many_arguments)]
pub fn bhattacharyya_certificate(
    points: &GridPoints,
    penalty: &Penalty,
    mode: PenaltyMode,
    alpha: f64,
    affinity: AffinitySum<'_>,
    resolvability: f64,
    n: usize,
    e_penalty: Option<Expectation>,
) -> Result<BoundCertificate> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha}")));
    }
    let nf = sample_size(n)?;
    let pen = penalty.values(points)?;
    let an = alpha * nf;
    let (log_sum, path) = match affinity {
        AffinitySum::Exact { truth } => {
            let fam = truth.family;
            let mut exps = Vec::with_capacity(points.len());
            for (i, t) in points.iter().enumerate() {
                let db = fam.bhattacharyya(&truth.theta, t)?;
                let e = -0.5 * an * db
                    - if mode == PenaltyMode::With {
                        0.5 * pen[i]
                    } else {
                        0.0
                    };
                exps.push(e);
            }
            (crate::numeric::log_sum_exp(&exps), "exact")
        }
        AffinitySum::Table(a) => {
            if a.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    found: a.len(),
                });
            }
            let mut exps = Vec::with_capacity(points.len());
            for (i, &ai) in a.iter().enumerate() {
                if !(ai > 0.0 && ai <= 1.0) {
                    return Err(invalid("affinity", format!("{ai} outside (0, 1]")));
                }
                let p = if mode == PenaltyMode::With {
                    0.5 * pen[i]
                } else {
                    0.0
                };
                exps.push(an * ai.ln() - p);
            }
            (crate::numeric::log_sum_exp(&exps), "table")
        }
        AffinitySum::GaussianEnvelope { c, eps } => {
            if mode == PenaltyMode::With && pen.iter().any(|v| *v < 0.0) {
                return Err(precondition(
                    "affinity envelope",
                    "penalty >= 0 so that exp(-L/2) <= 1",
                ));
            }
            if alpha == 0.0 {
                return Err(invalid("alpha", "the envelope path needs alpha > 0"));
            }
            let s = gaussian_sum_bound(eps, an * c, points.dim, true)?;
            (s.ln(), "gaussian-envelope")
        }
    };
    let id = match mode {
        PenaltyMode::With => TheoremId::BhattacharyyaPseudo,
        PenaltyMode::Without => TheoremId::BhattacharyyaMinusPenalty,
    };
    let mut b = Builder::new(id)
        .scale(1.0 / (1.0 - alpha))
        .component("resolvability", resolvability)
        .component("log-sum", 2.0 * log_sum / nf)
        .param("n", n)
        .param("alpha", alpha)
        .param("summation", path)
        .param("mode", json!(mode));
    b = match affinity {
        AffinitySum::Exact { .. } => b.checked("affinities from closed form"),
        AffinitySum::Table(_) => b.asserted("affinity table is exact"),
        AffinitySum::GaussianEnvelope { c, eps } => b
            .asserted(format!(
                "A(P, P_theta) <= exp(-{c} ||theta - theta*||^2) on the grid"
            ))
            .param("c", c)
            .param("eps", eps),
    };
    if mode == PenaltyMode::Without {
        let ep = e_penalty
            .ok_or_else(|| invalid("e_penalty", "needed when the penalty is subtracted"))?;
        b = b
            .component("penalty-expectation", -ep.value / nf)
            .expectation("E penalty(theta_hat)", &ep);
    }
    Ok(b.build())
}

/// Gaussian-decay constant with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConstant {
    pub c: f64,
    pub checked: bool,
}

impl DecayConstant {
    /// `c` from the curvature of the log-partition function over the box.
    pub fn certified(family: Family, domain: &ParamBox) -> Result<Self> {
        Ok(Self {
            c: family.gaussian_decay_constant(domain)?,
            checked: true,
        })
    }

    pub fn asserted(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(Self { c, checked: false })
    }
}

fn decay_assumption(b: Builder, c: DecayConstant) -> Builder {
    let name = format!(
        "A(P, P_theta) <= exp(-c ||theta - theta*||^2) with c = {}",
        c.c
    );
    let b = b.param("c", c.c);
    if c.checked {
        b.checked(name)
    } else {
        b.asserted(name)
    }
}

/// `2 [R + (2d log(1 + 2 sqrt(2 pi)/(eps sqrt(n c))) - E L(theta_hat)) / n]`.
pub fn gaussian_decay_certificate(
    eps: f64,
    d: usize,
    n: usize,
    c: DecayConstant,
    resolvability: f64,
    e_penalty: Expectation,
) -> Result<BoundCertificate> {
    positive("eps", eps)?;
    positive("c", c.c)?;
    let nf = sample_size(n)?;
    let df = d as f64;
    let log_term = 2.0 * df * (1.0 + 2.0 * (2.0 * PI).sqrt() / (eps * (nf * c.c).sqrt())).ln();
    let b = Builder::new(TheoremId::GaussianDecay)
        .scale(2.0)
        .component("resolvability", resolvability)
        .component("log-sum", log_term / nf)
        .component("penalty-expectation", -e_penalty.value / nf)
        .expectation("E penalty(theta_hat)", &e_penalty)
        .param("eps", eps)
        .param("d", d)
        .param("n", n);
    Ok(decay_assumption(b, c).build())
}

/// `eps = sqrt(2/n)`, zero penalty: `2 D(P || grid) + 4d log(1 + 4/sqrt c) / n`.
pub fn gaussian_decay_concrete_certificate(
    d: usize,
    n: usize,
    c: DecayConstant,
    divergence_to_grid: f64,
) -> Result<BoundCertificate> {
    positive("c", c.c)?;
    finite("divergence_to_grid", divergence_to_grid)?;
    let nf = sample_size(n)?;
    let df = d as f64;
    let b = Builder::new(TheoremId::GaussianDecayConcrete)
        .checked("eps = sqrt(2/n)")
        .checked("zero penalty")
        .component("divergence-to-grid", 2.0 * divergence_to_grid)
        .component("log-sum", 4.0 * df * (1.0 + 4.0 / c.c.sqrt()).ln() / nf)
        .param("eps", (2.0 / nf).sqrt())
        .param("d", d)
        .param("n", n);
    Ok(decay_assumption(b, c).build())
}

/// `4 [beta + d log(1 + 4/sqrt c)] / n` for the minimax risk over the parameter set.
pub fn minimax_certificate(beta: f64, c: f64, d: usize, n: usize) -> Result<BoundCertificate> {
    positive("beta", beta)?;
    positive("c", c)?;
    let nf = sample_size(n)?;
    let df = d as f64;
    Ok(Builder::new(TheoremId::Minimax)
        .asserted(format!(
            "grid is a KL-net: every parameter has a grid point with KL <= {beta} eps^2"
        ))
        .asserted(format!(
            "A(P, P_theta) <= exp(-{c} ||theta - theta*||^2) on the grid"
        ))
        .component("kl-net", 4.0 * beta / nf)
        .component("log-sum", 4.0 * df * (1.0 + 4.0 / c.sqrt()).ln() / nf)
        .param("beta", beta)
        .param("c", c)
        .param("d", d)
        .param("n", n)
        .param("eps", (2.0 / nf).sqrt())
        .build())
}

/// Inputs shared by the mixed-regime and squared-norm certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub eps: f64,
    pub d: usize,
    pub n: usize,
    /// Gaussian decay constant near `theta*`.
    pub c: f64,
    /// Power decay `A <= (a / ||theta - theta*||)^b` away from `theta*`.
    pub a: f64,
    pub b: f64,
    /// Radius separating the two regimes.
    pub radius: f64,
}

impl DecayProfile {
    fn validate(&self) -> Result<f64> {
        positive("eps", self.eps)?;
        positive("c", self.c)?;
        positive("a", self.a)?;
        positive("b", self.b)?;
        positive("radius", self.radius)?;
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        sample_size(self.n)
    }

    fn radius_floor(&self) -> f64 {
        (11.0 * self.a.powf(1.0 / self.b)).max(3.0 * self.eps)
    }

    fn radius_gate(&self) -> Result<()> {
        let floor = self.radius_floor();
        if self.radius >= floor {
            Ok(())
        } else {
            Err(precondition(
                "radius",
                format!(
                    "R >= 11 a^(1/b) v 3 eps (R = {}, required {floor})",
                    self.radius
                ),
            ))
        }
    }

    fn gaussian_center_log(&self) -> f64 {
        (1.0 + 2.0 * (2.0 * PI).sqrt() / (self.eps * (self.n as f64 * self.c).sqrt())).ln()
    }

    fn with_params(&self, b: Builder) -> Builder {
        b.param("eps", self.eps)
            .param("d", self.d)
            .param("n", self.n)
            .param("c", self.c)
            .param("a", self.a)
            .param("b", self.b)
            .param("R", self.radius)
            .asserted(format!(
                "A(P, P_theta) <= exp(-{} ||theta - theta*||^2) for ||theta - theta*|| <= R",
                self.c
            ))
            .asserted(format!(
                "A(P, P_theta) <= ({} / ||theta - theta*||)^{} beyond R",
                self.a, self.b
            ))
    }
}

/// Gaussian decay near the truth, power decay in the tails; needs `n >= 2(d+1)/b`.
pub fn mixed_regime_certificate(
    profile: &DecayProfile,
    resolvability: f64,
    e_penalty: Expectation,
) -> Result<BoundCertificate> {
    let nf = profile.validate()?;
    profile.radius_gate()?;
    let df = profile.d as f64;
    let min_n = 2.0 * (df + 1.0) / profile.b;
    if nf < min_n * (1.0 - 1e-12) {
        return Err(precondition(
            "sample size",
            format!("n >= 2(d+1)/b (n = {}, required {min_n})", profile.n),
        ));
    }
    let tail_log =
        (1.0 + 4.0 * 2f64.sqrt() * profile.radius / (profile.eps * (nf * profile.b).sqrt())).ln();
    let b = Builder::new(TheoremId::MixedRegime)
        .scale(2.0)
        .checked(format!(
            "R >= 11 a^(1/b) v 3 eps = {}",
            profile.radius_floor()
        ))
        .checked(format!("n >= 2(d+1)/b = {min_n}"))
        .component("resolvability", resolvability)
        .component(
            "gaussian-center",
            df * 2.0 * profile.gaussian_center_log() / nf,
        )
        .component("power-tail", df * 2.0 * tail_log / nf)
        .component("log-sum-constant", 3.0 / nf)
        .component("penalty-expectation", -e_penalty.value / nf)
        .expectation("E penalty(theta_hat)", &e_penalty);
    Ok(profile.with_params(b).build())
}

/// Squared-norm penalty, any sample size.
pub fn squared_norm_certificate(
    profile: &DecayProfile,
    theta_star_norm: f64,
    resolvability: f64,
) -> Result<BoundCertificate> {
    let nf = profile.validate()?;
    profile.radius_gate()?;
    if !(theta_star_norm >= 0.0 && theta_star_norm.is_finite()) {
        return Err(invalid(
            "theta_star_norm",
            format!("must be finite and >= 0, got {theta_star_norm}"),
        ));
    }
    let df = profile.d as f64;
    let r = profile.radius;
    let tail_log =
        (1.0 + (29.0 * df.sqrt() + 6.0 * r) / (profile.eps * (nf * profile.b).sqrt())).ln();
    let b = Builder::new(TheoremId::SquaredNorm)
        .checked(format!(
            "R >= 11 a^(1/b) v 3 eps = {}",
            profile.radius_floor()
        ))
        .checked("penalty is the squared norm")
        .asserted("validity rests on the large-n, reversed and middle power-decay lattice bounds")
        .component("resolvability", 2.0 * resolvability)
        .component(
            "gaussian-center",
            4.0 * df * profile.gaussian_center_log() / nf,
        )
        .component("power-tail", 4.0 * df * tail_log / nf)
        .component(
            "radius-correction",
            4.0 * (2.0 + 44.0 / (r * r * r)).ln() / nf,
        )
        .component("theta-star", 2.0 * theta_star_norm * theta_star_norm / nf)
        .component("constant", 8.0 / nf)
        .param("theta_star_norm", theta_star_norm);
    Ok(profile.with_params(b).build())
}

// ---- entropy, quadratic and penalty-based pseudo-penalties ----

/// `R + (2H - E L(theta_hat)) / n` with `H` a bound on the entropy of `theta_hat`.
pub fn entropy_certificate(
    resolvability: f64,
    entropy: Expectation,
    e_penalty: Expectation,
    n: usize,
) -> Result<BoundCertificate> {
    let nf = sample_size(n)?;
    if !(entropy.value >= 0.0) {
        return Err(invalid(
            "entropy",
            format!("must be >= 0, got {}", entropy.value),
        ));
    }
    Ok(Builder::new(TheoremId::Entropy)
        .component("resolvability", resolvability)
        .component("entropy", 2.0 * entropy.value / nf)
        .component("penalty-expectation", -e_penalty.value / nf)
        .expectation("H(theta_hat)", &entropy)
        .expectation("E penalty(theta_hat)", &e_penalty)
        .param("n", n)
        .build())
}

/// `(d/2)(4 sqrt(pi)/(eps sqrt c))^d + d log(1 + 2 max(c^-1/2, R, 3 eps)/eps)`, an
/// entropy bound for an estimator with Gaussian tails of rate `c` beyond `R`.
pub fn estimator_entropy_bound(eps: f64, d: usize, c: f64, radius: f64) -> Result<f64> {
    positive("eps", eps)?;
    positive("c", c)?;
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid(
            "radius",
            format!("must be finite and >= 0, got {radius}"),
        ));
    }
    let df = d as f64;
    let m = c.powf(-0.5).max(radius).max(3.0 * eps);
    Ok(
        0.5 * df * (4.0 * PI.sqrt() / (eps * c.sqrt())).powi(d as i32)
            + df * (1.0 + 2.0 * m / eps).ln(),
    )
}

/// `R + [2d log(1 + 2 sqrt(pi)/(eps sqrt alpha)) + alpha V theta_hat - E L(theta_hat)] / n`
/// for the pseudo-penalty `alpha ||theta - E theta_hat||^2`.
pub fn quadratic_certificate(
    eps: f64,
    d: usize,
    alpha: f64,
    variance: Expectation,
    e_penalty: Expectation,
    resolvability: f64,
    n: usize,
) -> Result<BoundCertificate> {
    positive("eps", eps)?;
    if alpha == 0.0 {
        return Err(invalid("alpha", "alpha = 0 makes the log term infinite"));
    }
    positive("alpha", alpha)?;
    if !(variance.value >= 0.0) {
        return Err(invalid(
            "variance",
            format!("must be >= 0, got {}", variance.value),
        ));
    }
    let nf = sample_size(n)?;
    let df = d as f64;
    Ok(Builder::new(TheoremId::Quadratic)
        .component("resolvability", resolvability)
        .component(
            "log-sum",
            2.0 * df * (1.0 + 2.0 * PI.sqrt() / (eps * alpha.sqrt())).ln() / nf,
        )
        .component("variance", alpha * variance.value / nf)
        .component("penalty-expectation", -e_penalty.value / nf)
        .expectation("V theta_hat", &variance)
        .expectation("E penalty(theta_hat)", &e_penalty)
        .param("eps", eps)
        .param("d", d)
        .param("alpha", alpha)
        .param("n", n)
        .build())
}

/// Pseudo-penalty `alpha * penalty`: `R + [2 log sum exp(-(alpha+1) L/2) + alpha E L(theta_hat)] / n`.
/// A `log(1/q)` codelength penalty with `alpha = 1` is tagged as the MAP bound.
pub fn penalty_pseudo_certificate(
    points: &GridPoints,
    penalty: &Penalty,
    alpha: f64,
    e_penalty: Expectation,
    resolvability: f64,
    n: usize,
) -> Result<BoundCertificate> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid(
            "alpha",
            format!("must be finite and >= 0, got {alpha}"),
        ));
    }
    let nf = sample_size(n)?;
    let pen = penalty.values(points)?;
    let scaled: Vec<f64> = pen.iter().map(|v| (alpha + 1.0) * v).collect();
    let sum = kraft_sum_values(&scaled, None)?;
    let map = alpha == 1.0
        && matches!(
            penalty,
            Penalty::Codelength {
                mode: CodelengthMode::Map,
                ..
            }
        );
    let id = if map {
        TheoremId::Map
    } else {
        TheoremId::PenaltyPseudo
    };
    let mut b = Builder::new(id)
        .component("resolvability", resolvability)
        .component("log-sum", 2.0 * sum.log_value / nf)
        .component("penalty-expectation", alpha * e_penalty.value / nf)
        .expectation("E penalty(theta_hat)", &e_penalty)
        .param("alpha", alpha)
        .param("n", n)
        .param("summation", sum.value);
    if map {
        b = b.checked("penalty is log(1/q) for a prior q summing to one");
    }
    Ok(b.build())
}

/// `min(1, exp(-n t / 2) * sum)`: probability that the Bhattacharyya loss exceeds the
/// penalized log-likelihood ratio by `t` or more.
pub fn tail_probability_bound(t: f64, n: usize, kraft_like_sum: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    if !(kraft_like_sum >= 0.0) {
        return Err(invalid(
            "kraft_like_sum",
            format!("must be >= 0, got {kraft_like_sum}"),
        ));
    }
    let nf = sample_size(n)?;
    Ok(((-0.5 * nf * t).exp() * kraft_like_sum).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ParamBox;

    const G1: Family = Family::Gaussian { dim: 1 };

    fn grid1(lo: f64, hi: f64, eps: f64) -> EpsGrid {
        EpsGrid::new(vec![0.0], eps, ParamBox::new(vec![lo], vec![hi]).unwrap()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn resolvability_examples() {
        let truth = Member::new(G1, vec![0.3]).unwrap();
        let r = resolvability_index(&grid1(-1.0, 1.0, 0.1), &Penalty::Zero, &truth, 100).unwrap();
        close(r.value, 0.0, 1e-15);
        let truth = Member::new(G1, vec![0.05]).unwrap();
        let g = grid1(-1.0, 1.0, 0.1);
        let r = resolvability_index(&g, &Penalty::Zero, &truth, 100).unwrap();
        close(r.value, 0.00125, 1e-15);
        let r2 = resolvability_index(&g, &Penalty::Constant { value: 2.0 }, &truth, 100).unwrap();
        close(r2.value, 0.02125, 1e-15);
    }

    #[test]
    fn taylor_bound_examples() {
        let truth = Member::new(G1, vec![0.0]).unwrap();
        let eps = (2.0f64 / 100.0).sqrt();
        let v = resolvability_taylor_bound(&truth, &[0.0], &Penalty::Zero, eps, 100).unwrap();
        close(v, 0.01, 1e-15);
    }

    #[test]
    fn general_examples() {
        let pts = grid1(-50.0, 50.0, 1.0).enumerate_points().unwrap();
        let c = general_certificate(
            &pts,
            &Penalty::Zero,
            &PseudoPenalty::Zero,
            Expectation::zero(),
            None,
            0.0,
            100,
            CombineMode::Add,
        )
        .unwrap();
        close(c.value, 0.092_302_410_336_825_2, 1e-14);
        let c = general_certificate(
            &pts,
            &Penalty::uniform_codelength(101, CodelengthMode::Twice),
            &PseudoPenalty::Zero,
            Expectation::zero(),
            None,
            0.5,
            100,
            CombineMode::Add,
        )
        .unwrap();
        close(c.value, 0.5, 1e-14);
        assert_eq!(c.value, c.reassemble());
    }

    #[test]
    fn concrete_and_minimax_values() {
        let c = DecayConstant::asserted(0.125).unwrap();
        let v = gaussian_decay_concrete_certificate(1, 100, c, 0.0)
            .unwrap()
            .value;
        close(v, 0.100_428_526_155_336_1, 1e-15);
        let m = minimax_certificate(0.125, 0.125, 1, 100).unwrap().value;
        close(m, 0.105_428_526_155_336_1, 1e-15);
        let eps = (2.0f64 / 100.0).sqrt();
        // at eps = sqrt(2/n) the general log argument is 1 + 2 sqrt(pi / c), rounded up to 1 + 4/sqrt(c)
        let g = gaussian_decay_certificate(eps, 1, 100, c, 0.0, Expectation::zero())
            .unwrap()
            .value;
        close(g, 0.04 * (1.0 + 2.0 * (PI / 0.125).sqrt()).ln(), 1e-15);
        assert!(g < v);
    }

    #[test]
    fn mixed_regime_gates() {
        let p = DecayProfile {
            eps: 0.1,
            d: 1,
            n: 100,
            c: 0.125,
            a: 1.0,
            b: 1.0,
            radius: 10.0,
        };
        assert!(matches!(
            mixed_regime_certificate(&p, 0.0, Expectation::zero()),
            Err(Error::Precondition { .. })
        ));
        let p = DecayProfile {
            eps: 0.1,
            d: 1,
            n: 2,
            c: 0.125,
            a: 1.0,
            b: 2.0,
            radius: 11.0,
        };
        assert!(mixed_regime_certificate(&p, 0.0, Expectation::zero()).is_ok());
        let p = DecayProfile { n: 1, b: 1.0, ..p };
        assert!(mixed_regime_certificate(&p, 0.0, Expectation::zero()).is_err());
        assert!(squared_norm_certificate(&p, 0.0, 0.0).is_ok());
    }

    #[test]
    fn quadratic_and_entropy() {
        let eps = 0.2;
        let q = quadratic_certificate(
            eps,
            1,
            1.0 / (eps * eps),
            Expectation::exact(0.0),
            Expectation::zero(),
            0.0,
            1,
        )
        .unwrap();
        close(q.value, 2.0 * (1.0 + 2.0 * PI.sqrt()).ln(), 1e-14);
        assert!(quadratic_certificate(
            eps,
            1,
            0.0,
            Expectation::zero(),
            Expectation::zero(),
            0.0,
            1
        )
        .is_err());
        let e = estimator_entropy_bound(1.0, 1, 16.0, 0.0).unwrap();
        close(e, 0.5 * PI.sqrt() + 7f64.ln(), 1e-14);
    }

    #[test]
    fn map_uniform_prior() {
        let pts = grid1(-50.0, 50.0, 1.0).enumerate_points().unwrap();
        let pen = Penalty::uniform_codelength(101, CodelengthMode::Map);
        let c =
            penalty_pseudo_certificate(&pts, &pen, 1.0, Expectation::exact(101f64.ln()), 0.25, 100)
                .unwrap();
        assert_eq!(c.theorem_id, TheoremId::Map);
        close(c.value, 0.25 + 101f64.ln() / 100.0, 1e-15);
    }

    #[test]
    fn tail_values() {
        close(
            tail_probability_bound(0.2, 100, 1.0).unwrap(),
            4.539_992_976_248_485e-5,
            1e-18,
        );
        assert_eq!(tail_probability_bound(0.0, 100, 3.0).unwrap(), 1.0);
    }
}
