//! Assembles every requested certificate for one sample size.

use resolv_core::bounds::{
    bhattacharyya_certificate, entropy_certificate, gaussian_decay_certificate,
    gaussian_decay_concrete_certificate, general_certificate_values, minimax_certificate,
    mixed_regime_certificate, penalty_pseudo_certificate, quadratic_certificate,
    resolvability_over_points, squared_norm_certificate, AffinitySum, BoundCertificate,
    CombineMode, DecayConstant, DecayProfile, Expectation, PenaltyMode, Resolvability, TheoremId,
};
use resolv_core::estimator::{PenalizedMle, Penalty, PseudoPenalty};
use resolv_core::verify::RiskReport;
use resolv_core::{EpsGrid, GridPoints, Member};
use serde::Serialize;

use crate::config::{ConfigError, EpsRule, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inapplicable {
    pub theorem_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSet {
    pub certificates: Vec<BoundCertificate>,
    pub inapplicable: Vec<Inapplicable>,
    /// Smaller of the mixed-regime and squared-norm certificates when both apply.
    pub power_decay_minimum: Option<String>,
}

/// Everything about one sample size that the certificates need.
pub struct SizeContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub n: usize,
    pub eps: f64,
    pub grid: EpsGrid,
    pub points: GridPoints,
    pub penalty: Vec<f64>,
    pub pseudo: PseudoPenalty,
    pub pseudo_values: Vec<f64>,
    pub truth: Option<Member>,
    pub resolvability: Option<Resolvability>,
}

fn cfg_err(n: usize, e: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("n = {n}: {e}"))
}

impl<'a> SizeContext<'a> {
    pub fn new(cfg: &'a ExperimentConfig, n: usize) -> Result<Self, ConfigError> {
        let grid = cfg.grid_for(n)?;
        let points = grid.enumerate_points().map_err(|e| cfg_err(n, e))?;
        let penalty = cfg.penalty.values(&points).map_err(|e| cfg_err(n, e))?;
        let truth = cfg.truth();
        let pseudo = match &cfg.pseudo_penalty {
            Some(spec) => spec.resolve(n, truth.as_ref()).map_err(|e| cfg_err(n, e))?,
            None => PseudoPenalty::Zero,
        };
        let pseudo_values = pseudo
            .values(&points, &penalty)
            .map_err(|e| cfg_err(n, e))?;
        let resolvability = match &truth {
            Some(t) => Some(
                resolvability_over_points(&points, &penalty, t, n).map_err(|e| cfg_err(n, e))?,
            ),
            None => None,
        };
        Ok(Self {
            cfg,
            n,
            eps: grid.spacing(),
            grid,
            points,
            penalty,
            pseudo,
            pseudo_values,
            truth,
            resolvability,
        })
    }

    pub fn estimator(&self) -> Result<PenalizedMle, ConfigError> {
        PenalizedMle::from_points(self.cfg.family, self.points.clone(), self.penalty.clone())
            .map_err(|e| cfg_err(self.n, e))
    }

    pub fn pseudo_slice(&self) -> Option<&[f64]> {
        (!matches!(self.pseudo, PseudoPenalty::Zero)).then_some(self.pseudo_values.as_slice())
    }

    pub fn certificates(&self, theorems: &[TheoremId], mc: Option<&RiskReport>) -> CertificateSet {
        let mut certificates = Vec::new();
        let mut inapplicable = Vec::new();
        for &t in theorems {
            match self.certificate(t, mc) {
                Ok(c) => certificates.push(c),
                Err(reason) => inapplicable.push(Inapplicable {
                    theorem_id: t.as_str().to_string(),
                    reason,
                }),
            }
        }
        let find = |id: TheoremId| certificates.iter().find(|c| c.theorem_id == id);
        let power_decay_minimum = match (find(TheoremId::MixedRegime), find(TheoremId::SquaredNorm))
        {
            (Some(m), Some(s)) => Some(
                if m.value <= s.value { m } else { s }
                    .theorem_id
                    .as_str()
                    .to_string(),
            ),
            _ => None,
        };
        CertificateSet {
            certificates,
            inapplicable,
            power_decay_minimum,
        }
    }

    fn resolv(&self) -> Result<f64, String> {
        match &self.resolvability {
            Some(r) if r.value.is_finite() => Ok(r.value),
            Some(r) => Err(r
                .diagnostic
                .clone()
                .unwrap_or_else(|| "resolvability is infinite".into())),
            None => Err("needs the data-generating parameter `theta`".into()),
        }
    }

    fn truth(&self) -> Result<&Member, String> {
        self.truth
            .as_ref()
            .ok_or_else(|| "needs the data-generating parameter `theta`".into())
    }

    /// `E penalty(theta_hat)` where it enters with a minus sign: a lower bound.
    fn e_penalty_subtracted(&self, mc: Option<&RiskReport>) -> Expectation {
        self.expect_over(
            &self.penalty,
            mc.map(|r| (r.e_penalty_hat, r.e_penalty_stderr, r.reps)),
            f64::min,
        )
    }

    /// `E penalty(theta_hat)` where it enters with a plus sign: an upper bound.
    fn e_penalty_added(&self, mc: Option<&RiskReport>) -> Expectation {
        self.expect_over(
            &self.penalty,
            mc.map(|r| (r.e_penalty_hat, r.e_penalty_stderr, r.reps)),
            f64::max,
        )
    }

    fn e_pseudo(&self, mc: Option<&RiskReport>) -> Expectation {
        self.expect_over(
            &self.pseudo_values,
            mc.map(|r| (r.e_pseudo_hat, r.e_pseudo_stderr, r.reps)),
            f64::max,
        )
    }

    fn expect_over(
        &self,
        values: &[f64],
        mc: Option<(f64, f64, usize)>,
        pick: fn(f64, f64) -> f64,
    ) -> Expectation {
        let first = values[0];
        if values.iter().all(|v| *v == first) {
            return Expectation::exact(first);
        }
        match mc {
            Some((v, se, reps)) => Expectation::monte_carlo(v, se, reps),
            None => Expectation::bound(values.iter().copied().fold(first, pick)),
        }
    }

    fn decay_constant(&self) -> Result<DecayConstant, String> {
        match self.cfg.decay.c {
            Some(c) => DecayConstant::asserted(c).map_err(|e| e.to_string()),
            None => DecayConstant::certified(self.cfg.family, self.grid.domain())
                .map_err(|e| format!("no decay constant: set `decay.c` ({e})")),
        }
    }

    fn profile(&self) -> Result<DecayProfile, String> {
        let d = &self.cfg.decay;
        let (Some(a), Some(b), Some(radius)) = (d.a, d.b, d.radius) else {
            return Err("needs `decay.a`, `decay.b` and `decay.radius`".into());
        };
        Ok(DecayProfile {
            eps: self.eps,
            d: self.cfg.family.dim(),
            n: self.n,
            c: self.decay_constant()?.c,
            a,
            b,
            radius,
        })
    }

    fn concrete_grid(&self) -> Result<(), String> {
        if self.cfg.eps_rule() != EpsRule::SqrtTwoOverN {
            return Err("needs `grid.eps_rule` = \"sqrt(2/n)\"".into());
        }
        if self.cfg.penalty != Penalty::Zero {
            return Err("needs the zero penalty".into());
        }
        Ok(())
    }

    fn certificate(
        &self,
        t: TheoremId,
        mc: Option<&RiskReport>,
    ) -> Result<BoundCertificate, String> {
        let n = self.n;
        let d = self.cfg.family.dim();
        let msg = |e: resolv_core::Error| e.to_string();
        match t {
            TheoremId::General | TheoremId::SubtractPenalty => {
                let mode = if t == TheoremId::General {
                    CombineMode::Add
                } else {
                    CombineMode::Subtract
                };
                general_certificate_values(
                    &self.penalty,
                    &self.pseudo_values,
                    self.e_pseudo(mc),
                    Some(self.e_penalty_subtracted(mc)),
                    self.resolv()?,
                    n,
                    mode,
                )
                .map_err(msg)
            }
            TheoremId::BhattacharyyaPseudo | TheoremId::BhattacharyyaMinusPenalty => {
                let (mode, e_pen) = if t == TheoremId::BhattacharyyaPseudo {
                    (PenaltyMode::With, None)
                } else {
                    (PenaltyMode::Without, Some(self.e_penalty_subtracted(mc)))
                };
                let alpha = self.cfg.alpha.unwrap_or(0.5);
                bhattacharyya_certificate(
                    &self.points,
                    &self.cfg.penalty,
                    mode,
                    alpha,
                    AffinitySum::Exact {
                        truth: self.truth()?,
                    },
                    self.resolv()?,
                    n,
                    e_pen,
                )
                .map_err(msg)
            }
            TheoremId::GaussianDecay => gaussian_decay_certificate(
                self.eps,
                d,
                n,
                self.decay_constant()?,
                self.resolv()?,
                self.e_penalty_subtracted(mc),
            )
            .map_err(msg),
            TheoremId::GaussianDecayConcrete => {
                self.concrete_grid()?;
                let c = self.decay_constant()?;
                gaussian_decay_concrete_certificate(d, n, c, self.resolv()?).map_err(msg)
            }
            TheoremId::Minimax => {
                self.concrete_grid()?;
                let c = self.decay_constant()?;
                minimax_certificate(self.cfg.family.kl_net_beta(), c.c, d, n).map_err(msg)
            }
            TheoremId::MixedRegime => {
                let p = self.profile()?;
                mixed_regime_certificate(&p, self.resolv()?, self.e_penalty_subtracted(mc))
                    .map_err(msg)
            }
            TheoremId::SquaredNorm => {
                if self.cfg.penalty != Penalty::SquaredNorm {
                    return Err("needs the squared-norm penalty".into());
                }
                let p = self.profile()?;
                let norm = self
                    .truth()?
                    .theta
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt();
                squared_norm_certificate(&p, norm, self.resolv()?).map_err(msg)
            }
            TheoremId::Entropy => {
                let cap = (self.points.len() as f64).ln();
                let h = match mc {
                    // Miller-Madow corrected plug-in, capped by log |grid|.
                    Some(r) => Expectation::monte_carlo(
                        (r.entropy_hat
                            + (r.distinct_estimates as f64 - 1.0) / (2.0 * r.reps as f64))
                            .min(cap),
                        0.0,
                        r.reps,
                    ),
                    None => Expectation::bound(cap),
                };
                entropy_certificate(self.resolv()?, h, self.e_penalty_subtracted(mc), n)
                    .map_err(msg)
            }
            TheoremId::Quadratic => {
                let alpha = self.cfg.quadratic_alpha.unwrap_or(n as f64 / 2.0);
                let var = match mc {
                    Some(r) => Expectation::monte_carlo(r.var_hat, 0.0, r.reps),
                    None => {
                        let b = self.grid.domain();
                        Expectation::bound(
                            b.lo.iter()
                                .zip(&b.hi)
                                .map(|(l, h)| 0.25 * (h - l) * (h - l))
                                .sum(),
                        )
                    }
                };
                quadratic_certificate(
                    self.eps,
                    d,
                    alpha,
                    var,
                    self.e_penalty_subtracted(mc),
                    self.resolv()?,
                    n,
                )
                .map_err(msg)
            }
            TheoremId::PenaltyPseudo | TheoremId::Map => {
                let alpha = self.cfg.penalty_alpha.unwrap_or(1.0);
                let c = penalty_pseudo_certificate(
                    &self.points,
                    &self.cfg.penalty,
                    alpha,
                    self.e_penalty_added(mc),
                    self.resolv()?,
                    n,
                )
                .map_err(msg)?;
                if c.theorem_id != t {
                    return Err(if t == TheoremId::Map {
                        "needs a codelength penalty in map mode with penalty_alpha = 1".into()
                    } else {
                        "covered by the map certificate".into()
                    });
                }
                Ok(c)
            }
        }
    }
}
