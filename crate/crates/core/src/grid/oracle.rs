//! Brute-force checks of the lattice-sum bounds.
//!
//! Each case sums the bounded function exactly over lattice points within a truncation
//! radius `T` and bounds the rest with [`lattice_tail_bound`], which compares every
//! omitted point with the cube of side `eps` centered on it. That remainder does not rely
//! on any of the bounds under test. A case passes when `sum + tail <= bound`, is a
//! violation when the partial sum alone exceeds the bound, and is inconclusive otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bounds::{
    gaussian_sum_bound, power_decay_large_n_bound, power_decay_middle_bound,
    power_decay_reversed_bound, power_sum_bound, tail_sum_integral_bound, PowerDecayParams,
    TailCoefficient,
};
use super::{lattice_tail_bound, truncated_grid_sum, Lattice, RadialEnvelope, SumDomain};
use crate::error::{invalid, Result};
use crate::numeric::{norm, squared_norm};

/// Default cap on lattice points visited by a single case.
pub const DEFAULT_POINT_BUDGET: f64 = 200_000.0;

/// Target ratio of the analytic remainder to the bound.
const TAIL_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridLemma {
    GaussianOnCenter,
    GaussianOffCenter,
    TailSumExact,
    TailSumStirling,
    PowerSum,
    PowerDecayLargeN,
    PowerDecayReversed,
    PowerDecayMiddle,
}

impl GridLemma {
    pub const ALL: [GridLemma; 8] = [
        GridLemma::GaussianOnCenter,
        GridLemma::GaussianOffCenter,
        GridLemma::TailSumExact,
        GridLemma::TailSumStirling,
        GridLemma::PowerSum,
        GridLemma::PowerDecayLargeN,
        GridLemma::PowerDecayReversed,
        GridLemma::PowerDecayMiddle,
    ];

    pub fn id(self) -> &'static str {
        match self {
            GridLemma::GaussianOnCenter => "gaussian-sum",
            GridLemma::GaussianOffCenter => "gaussian-sum-off-center",
            GridLemma::TailSumExact => "tail-sum-exact-gamma",
            GridLemma::TailSumStirling => "tail-sum-stirling",
            GridLemma::PowerSum => "power-sum",
            GridLemma::PowerDecayLargeN => "power-decay-large-n",
            GridLemma::PowerDecayReversed => "power-decay-reversed",
            GridLemma::PowerDecayMiddle => "power-decay-middle",
        }
    }
}

/// A fully specified lattice-sum instance. Serializes for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub lemma: GridLemma,
    pub eps: f64,
    pub offset: Vec<f64>,
    /// Peak of the Gaussian or `theta*`.
    pub center: Vec<f64>,
    /// Gaussian rate `c` (Gaussian lemmas only).
    pub c: f64,
    /// Excluded radius `R` (zero for the Gaussian lemmas).
    pub radius: f64,
    /// Summand for the tail-sum lemmas; `q` for the power-sum lemma is `-envelope.power`.
    pub envelope: Option<RadialEnvelope>,
    pub power_decay: Option<PowerDecayParams>,
    /// Truncation radius chosen when the case was drawn.
    pub truncation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub bound: f64,
    pub sum: f64,
    pub tail: f64,
    pub verdict: Verdict,
    /// `(bound - sum - tail) / bound`; negative when the check does not pass.
    pub margin: f64,
}

impl GridCase {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn bound(&self) -> Result<f64> {
        let d = self.dim();
        match self.lemma {
            GridLemma::GaussianOnCenter => gaussian_sum_bound(self.eps, self.c, d, false),
            GridLemma::GaussianOffCenter => gaussian_sum_bound(self.eps, self.c, d, true),
            GridLemma::TailSumExact | GridLemma::TailSumStirling => {
                let form = if self.lemma == GridLemma::TailSumExact {
                    TailCoefficient::ExactGamma
                } else {
                    TailCoefficient::Stirling
                };
                tail_sum_integral_bound(&self.summand()?, self.eps, d, self.radius, form)
            }
            GridLemma::PowerSum => {
                power_sum_bound(self.eps, d, self.radius, -self.summand()?.power)
            }
            GridLemma::PowerDecayLargeN => power_decay_large_n_bound(&self.params()?),
            GridLemma::PowerDecayReversed => power_decay_reversed_bound(&self.params()?),
            GridLemma::PowerDecayMiddle => power_decay_middle_bound(&self.params()?),
        }
    }

    fn summand(&self) -> Result<RadialEnvelope> {
        self.envelope
            .ok_or_else(|| invalid("envelope", "case has no summand"))
    }

    fn params(&self) -> Result<PowerDecayParams> {
        self.power_decay
            .ok_or_else(|| invalid("power_decay", "case has no power-decay parameters"))
    }

    /// Radial function dominating the summand beyond the truncation radius.
    fn tail_envelope(&self) -> Result<RadialEnvelope> {
        match self.lemma {
            GridLemma::GaussianOnCenter | GridLemma::GaussianOffCenter => {
                Ok(RadialEnvelope::gaussian(1.0, self.c))
            }
            GridLemma::TailSumExact | GridLemma::TailSumStirling | GridLemma::PowerSum => {
                self.summand()
            }
            GridLemma::PowerDecayLargeN
            | GridLemma::PowerDecayReversed
            | GridLemma::PowerDecayMiddle => {
                let p = self.params()?;
                let q = p.b * p.alpha * p.n as f64;
                let scale =
                    (p.alpha * p.n as f64 * p.a.ln() + p.kappa * squared_norm(&self.center)).exp();
                // exp(-kappa ||theta||^2) <= exp(kappa ||theta*||^2 - kappa ||theta - theta*||^2 / 2)
                Ok(RadialEnvelope::gaussian_power(scale, p.kappa / 2.0, q))
            }
        }
    }

    /// Evaluates the summand at `point`, `r = ||point - center||`.
    fn term(&self, point: &[f64], r: f64) -> f64 {
        match self.lemma {
            GridLemma::GaussianOnCenter | GridLemma::GaussianOffCenter => (-self.c * r * r).exp(),
            GridLemma::TailSumExact | GridLemma::TailSumStirling | GridLemma::PowerSum => {
                if r > self.radius {
                    self.envelope.map_or(0.0, |e| e.eval(r))
                } else {
                    0.0
                }
            }
            _ => {
                if r <= self.radius {
                    return 0.0;
                }
                let p = self.power_decay.expect("validated by bound()");
                let an = p.alpha * p.n as f64;
                (an * (p.a.ln() - p.b * r.ln()) - p.kappa * squared_norm(point)).exp()
            }
        }
    }

    /// Points the truncated sum would visit.
    pub fn cost(&self) -> f64 {
        Lattice {
            offset: self.offset.clone(),
            spacing: self.eps,
        }
        .box_count(&self.center, self.truncation)
    }

    pub fn check(&self) -> Result<GridCheck> {
        let bound = self.bound()?;
        let lattice = Lattice::new(self.offset.clone(), self.eps)?;
        let env = self.tail_envelope()?;
        let s = truncated_grid_sum(
            SumDomain::Lattice(&lattice),
            &self.center,
            self.truncation,
            |p, r| self.term(p, r),
            Some(&env),
        )?;
        let upper = s.upper();
        let verdict = if upper <= bound {
            Verdict::Pass
        } else if s.sum > bound {
            Verdict::Violation
        } else {
            Verdict::Inconclusive
        };
        Ok(GridCheck {
            bound,
            sum: s.sum,
            tail: s.tail,
            verdict,
            margin: (bound - upper) / bound,
        })
    }

    /// Picks the smallest truncation radius of the form `T0 * 1.5^k` whose remainder is at
    /// most `1e-6` of the bound. Returns `None` when that radius would exceed the budget.
    fn choose_truncation(&mut self, budget: f64) -> Result<Option<f64>> {
        let bound = self.bound()?;
        let env = self.tail_envelope()?;
        let d = self.dim();
        let mut t =
            (self.radius + 30.0 * self.eps).max(2.0 * self.eps * (d as f64).sqrt() + self.eps);
        let lattice = Lattice {
            offset: self.offset.clone(),
            spacing: self.eps,
        };
        loop {
            if lattice.box_count(&self.center, t) > budget {
                return Ok(None);
            }
            let tail = lattice_tail_bound(&env, self.eps, d, t)?;
            if tail <= TAIL_FRACTION * bound {
                self.truncation = t;
                return Ok(Some(t));
            }
            t *= 1.5;
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn draw_radius<R: Rng + ?Sized>(rng: &mut R, floor: f64) -> f64 {
    floor * rng.random_range(1.02..2.5)
}

/// Draws one admissible case for `lemma` whose truncated sum fits in `budget` points.
///
/// Parameters are drawn from fixed ranges (d in 1..=3, eps log-uniform on [0.05, 2],
/// Gaussian factors log-uniform on [1e-3, 10]) and redrawn until the case fits.
pub fn sample_case<R: Rng + ?Sized>(
    lemma: GridLemma,
    rng: &mut R,
    budget: f64,
) -> Result<GridCase> {
    for _ in 0..100_000 {
        let mut d = rng.random_range(1..=3usize);
        if lemma == GridLemma::PowerDecayReversed && d == 1 {
            d = rng.random_range(2..=3usize);
        }
        let eps = log_uniform(rng, 0.05, 2.0);
        let offset: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..eps)).collect();
        let mut case = GridCase {
            lemma,
            eps,
            offset: offset.clone(),
            center: vec![0.0; d],
            c: 0.0,
            radius: 0.0,
            envelope: None,
            power_decay: None,
            truncation: 0.0,
        };
        match lemma {
            GridLemma::GaussianOnCenter | GridLemma::GaussianOffCenter => {
                case.c = log_uniform(rng, 0.01, 10.0);
                case.center = if lemma == GridLemma::GaussianOnCenter {
                    offset
                        .iter()
                        .map(|v| v + eps * rng.random_range(-3..=3) as f64)
                        .collect()
                } else {
                    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
                };
            }
            GridLemma::TailSumExact | GridLemma::TailSumStirling | GridLemma::PowerSum => {
                case.center = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                case.radius = eps * rng.random_range(3.0..12.0);
                let df = d as f64;
                let env = if lemma == GridLemma::PowerSum {
                    RadialEnvelope::power(1.0, df + rng.random_range(0.2..4.0))
                } else {
                    match rng.random_range(0..3) {
                        0 => RadialEnvelope::power(1.0, df + rng.random_range(0.2..4.0)),
                        1 => RadialEnvelope::gaussian(1.0, log_uniform(rng, 0.01, 5.0)),
                        _ => RadialEnvelope::gaussian_power(
                            1.0,
                            log_uniform(rng, 0.01, 5.0),
                            rng.random_range(0.0..3.0),
                        ),
                    }
                };
                case.envelope = Some(env);
            }
            GridLemma::PowerDecayLargeN
            | GridLemma::PowerDecayReversed
            | GridLemma::PowerDecayMiddle => {
                let df = d as f64;
                let alpha = rng.random_range(0.1..=1.0);
                let b = rng.random_range(0.2..3.0);
                let a = log_uniform(rng, 0.1, 3.0);
                let ab = alpha * b;
                let n = match lemma {
                    GridLemma::PowerDecayLargeN => {
                        ((df + 1.0) / ab).ceil() as usize + rng.random_range(0..20usize)
                    }
                    GridLemma::PowerDecayReversed => {
                        let hi = ((df - 1.0) / ab).floor();
                        if hi < 1.0 {
                            continue;
                        }
                        rng.random_range(1..=(hi as usize).min(60))
                    }
                    _ => {
                        let lo = ((df - 1.0) / ab).floor() as usize + 1;
                        let hi = ((df + 1.0) / ab).ceil() as usize - 1;
                        let lo = lo.max(1);
                        let inside: Vec<usize> = (lo..=hi)
                            .filter(|&m| {
                                let m = m as f64;
                                m > (df - 1.0) / ab && m < (df + 1.0) / ab
                            })
                            .collect();
                        if inside.is_empty() {
                            continue;
                        }
                        inside[rng.random_range(0..inside.len())]
                    }
                };
                let kappa = if lemma == GridLemma::PowerDecayLargeN {
                    0.0
                } else {
                    log_uniform(rng, 1e-3, 10.0)
                };
                let star_norm = if kappa > 0.0 {
                    rng.random_range(0.0..2.0)
                } else {
                    rng.random_range(0.0..5.0)
                };
                case.center = random_direction(rng, d)
                    .into_iter()
                    .map(|x| x * star_norm)
                    .collect();
                let floor = (4.0 * a.powf(1.0 / b)).max(3.0 * eps);
                case.radius = draw_radius(rng, floor);
                case.power_decay = Some(PowerDecayParams {
                    eps,
                    d,
                    radius: case.radius,
                    a,
                    b,
                    alpha,
                    n,
                    kappa,
                    theta_star_norm: norm(&case.center),
                });
            }
        }
        let bound = match case.bound() {
            Ok(v) if v.is_finite() && v > 0.0 => v,
            _ => continue,
        };
        let _ = bound;
        match case.choose_truncation(budget) {
            Ok(Some(_)) => return Ok(case),
            Ok(None) | Err(_) => continue,
        }
    }
    Err(invalid(
        "budget",
        format!("no admissible {} case fits the point budget", lemma.id()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stream_rng;

    #[test]
    fn sampled_cases_are_deterministic_and_fit_budget() {
        for lemma in GridLemma::ALL {
            let a = sample_case(lemma, &mut stream_rng(5, 0), 5e4).unwrap();
            let b = sample_case(lemma, &mut stream_rng(5, 0), 5e4).unwrap();
            assert_eq!(a, b);
            assert!(a.cost() <= 5e4);
        }
    }

    #[test]
    fn gaussian_cases_pass() {
        let mut rng = stream_rng(9, 1);
        for lemma in [
            GridLemma::GaussianOnCenter,
            GridLemma::GaussianOffCenter,
            GridLemma::PowerSum,
        ] {
            for _ in 0..10 {
                let case = sample_case(lemma, &mut rng, 5e4).unwrap();
                let check = case.check().unwrap();
                assert_eq!(check.verdict, Verdict::Pass, "{case:?} {check:?}");
            }
        }
    }

    #[test]
    fn middle_regime_counterexample_is_detected() {
        let params = PowerDecayParams {
            eps: 0.5,
            d: 1,
            radius: 10.0,
            a: 2.5,
            b: 1.0,
            alpha: 0.5,
            n: 1,
            kappa: 0.001,
            theta_star_norm: 0.0,
        };
        let mut case = GridCase {
            lemma: GridLemma::PowerDecayMiddle,
            eps: 0.5,
            offset: vec![0.0],
            center: vec![0.0],
            c: 0.0,
            radius: 10.0,
            envelope: None,
            power_decay: Some(params),
            truncation: 0.0,
        };
        case.choose_truncation(1e6).unwrap().unwrap();
        let check = case.check().unwrap();
        assert_eq!(check.verdict, Verdict::Violation);
        assert!(check.sum > 20.0 && check.bound < 5.0);
    }
}
