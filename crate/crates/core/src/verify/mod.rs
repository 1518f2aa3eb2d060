//! Monte Carlo risk and tail-frequency harness, and the randomized lemma suite.

mod lemmas;

pub use lemmas::{
    first_moments_instance, lemma_suite, median_affinity_instance, CheckRecord, Instance,
    LemmaCheckLedger, LemmaSuiteConfig, CHECK_IDS,
};

use std::collections::BTreeMap;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::BoundCertificate;
use crate::error::{invalid, Error, Result};
use crate::estimator::{kraft_sum_values, PenalizedMle};
use crate::models::{DataSample, Family, Member};
use crate::numeric::{stream_rng, CompensatedSum};

/// Certificates are compared against `mc_risk + SIGMA * stderr`.
pub const SIGMA: f64 = 3.0;

const CHUNK: usize = 256;

/// Data-generating distribution `P`.
pub trait DataGenerator: Sync {
    fn dim(&self) -> usize;

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<DataSample>;

    /// `log p(x)`.
    fn log_density(&self, x: &[f64]) -> f64;

    /// `D_B(P, P_theta)` for a member of `family`.
    fn bhattacharyya_to(&self, family: Family, theta: &[f64]) -> Result<f64>;
}

impl DataGenerator for Member {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<DataSample> {
        let values = self.family.sample_with(&self.theta, n, rng)?;
        DataSample::new(values, self.family.dim(), None)
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.family.log_density_unchecked(&self.theta, x)
    }

    fn bhattacharyya_to(&self, family: Family, theta: &[f64]) -> Result<f64> {
        if family != self.family {
            return Err(invalid(
                "family",
                "the truth belongs to a different family than the model",
            ));
        }
        self.family.bhattacharyya(&self.theta, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Abort with [`Error::BudgetExceeded`] once this instant has passed.
    pub deadline: Option<Instant>,
}

impl McConfig {
    pub fn new(n: usize, reps: usize, seed: u64) -> Self {
        Self {
            n,
            reps,
            seed,
            deadline: None,
        }
    }

    fn validate(&self, min_reps: usize) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.reps < min_reps {
            return Err(invalid("reps", format!("must be at least {min_reps}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub certificate_id: String,
    pub value: f64,
    pub satisfied: bool,
    /// `value - (mc_risk + 3 stderr)`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub n: usize,
    pub mc_risk: f64,
    pub stderr: f64,
    pub reps: usize,
    pub seed: u64,
    pub e_penalty_hat: f64,
    pub e_penalty_stderr: f64,
    pub e_pseudo_hat: f64,
    pub e_pseudo_stderr: f64,
    /// Plug-in entropy of the empirical distribution of the estimate.
    pub entropy_hat: f64,
    /// `mean ||theta_hat - mean theta_hat||^2`.
    pub var_hat: f64,
    pub distinct_estimates: usize,
    /// Replicates with infinite loss; any entry makes the report non-informative.
    pub nonfinite_replicates: Vec<usize>,
    pub informative: bool,
    pub comparisons: Vec<Comparison>,
}

impl RiskReport {
    pub fn upper(&self) -> f64 {
        self.mc_risk + SIGMA * self.stderr
    }

    pub fn compare(&mut self, cert: &BoundCertificate) -> Comparison {
        self.compare_value(cert.theorem_id.as_str(), cert.value)
    }

    pub fn compare_value(&mut self, id: &str, value: f64) -> Comparison {
        let upper = self.upper();
        let c = Comparison {
            certificate_id: id.to_string(),
            value,
            satisfied: self.informative && upper <= value,
            margin: value - upper,
        };
        self.comparisons.push(c.clone());
        c
    }
}

struct Replicate {
    ordinal: usize,
    loss: f64,
    /// `D_B - [sum log(p / p_hat) + penalty + pseudo] / n`.
    excess: f64,
}

fn run_replicates(
    truth: &dyn DataGenerator,
    mle: &PenalizedMle,
    pseudo: Option<&[f64]>,
    cfg: &McConfig,
    with_excess: bool,
) -> Result<Vec<Replicate>> {
    if truth.dim() != mle.family().dim() {
        return Err(Error::DimensionMismatch {
            expected: mle.family().dim(),
            found: truth.dim(),
        });
    }
    if let Some(l) = pseudo {
        if l.len() != mle.points().len() {
            return Err(Error::DimensionMismatch {
                expected: mle.points().len(),
                found: l.len(),
            });
        }
    }
    let nf = cfg.n as f64;
    let one = |r: usize| -> Result<Replicate> {
        let mut rng = stream_rng(cfg.seed, r as u64);
        let data = truth.draw(cfg.n, &mut rng)?;
        let fit = mle.fit(&data)?;
        let loss = truth.bhattacharyya_to(mle.family(), &fit.theta)?;
        let excess = if with_excess {
            let log_p: f64 = data
                .points()
                .map(|x| truth.log_density(x))
                .collect::<CompensatedSum>()
                .value();
            let l = pseudo.map_or(0.0, |l| l[fit.ordinal]);
            loss - (log_p + fit.objective + l) / nf
        } else {
            0.0
        };
        Ok(Replicate {
            ordinal: fit.ordinal,
            loss,
            excess,
        })
    };
    let mut out = Vec::with_capacity(cfg.reps);
    let mut start = 0;
    while start < cfg.reps {
        if let Some(deadline) = cfg.deadline {
            if Instant::now() > deadline {
                return Err(Error::BudgetExceeded {
                    completed: start,
                    requested: cfg.reps,
                });
            }
        }
        let end = (start + CHUNK).min(cfg.reps);
        let chunk: Vec<Result<Replicate>> = (start..end).into_par_iter().map(one).collect();
        for r in chunk {
            out.push(r?);
        }
        start = end;
    }
    Ok(out)
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let c = count as f64;
    let mean = values.clone().collect::<CompensatedSum>().value() / c;
    if count < 2 || !mean.is_finite() {
        return (mean, if mean.is_finite() { 0.0 } else { f64::INFINITY });
    }
    let ss = values
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value();
    (mean, (ss / (c - 1.0)).sqrt() / c.sqrt())
}

/// Monte Carlo estimate of `E D_B(P, P_theta_hat)`. Replicate `r` draws its sample from
/// the ChaCha stream `(seed, r)`, so results do not depend on thread scheduling.
pub fn mc_risk(
    truth: &dyn DataGenerator,
    mle: &PenalizedMle,
    pseudo: Option<&[f64]>,
    cfg: &McConfig,
) -> Result<RiskReport> {
    cfg.validate(2)?;
    let reps = run_replicates(truth, mle, pseudo, cfg, false)?;
    let count = reps.len();
    let nonfinite: Vec<usize> = reps
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.loss.is_finite())
        .map(|(i, _)| i)
        .collect();
    let (mc, se) = mean_and_stderr(reps.iter().map(|r| r.loss), count);
    let pen = mle.penalty();
    let (e_pen, e_pen_se) = mean_and_stderr(reps.iter().map(|r| pen[r.ordinal]), count);
    let (e_pseudo, e_pseudo_se) = pseudo.map_or((0.0, 0.0), |l| {
        mean_and_stderr(reps.iter().map(|r| l[r.ordinal]), count)
    });

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &reps {
        *counts.entry(r.ordinal).or_default() += 1;
    }
    let entropy = counts
        .values()
        .map(|&k| {
            let p = k as f64 / count as f64;
            -p * p.ln()
        })
        .collect::<CompensatedSum>()
        .value();

    let d = mle.points().dim;
    let pts = mle.points();
    let centre: Vec<f64> = (0..d)
        .map(|j| {
            counts
                .iter()
                .map(|(&o, &k)| k as f64 * pts.point(o)[j])
                .collect::<CompensatedSum>()
                .value()
                / count as f64
        })
        .collect();
    let var = counts
        .iter()
        .map(|(&o, &k)| k as f64 * crate::numeric::squared_distance(pts.point(o), &centre))
        .collect::<CompensatedSum>()
        .value()
        / count as f64;

    Ok(RiskReport {
        n: cfg.n,
        mc_risk: mc,
        stderr: se,
        reps: count,
        seed: cfg.seed,
        e_penalty_hat: e_pen,
        e_penalty_stderr: e_pen_se,
        e_pseudo_hat: e_pseudo,
        e_pseudo_stderr: e_pseudo_se,
        entropy_hat: entropy,
        var_hat: var,
        distinct_estimates: counts.len(),
        informative: nonfinite.is_empty(),
        nonfinite_replicates: nonfinite,
        comparisons: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub n: usize,
    pub t: f64,
    pub reps: usize,
    pub seed: u64,
    pub exceedances: usize,
    pub frequency: f64,
    /// Wilson interval at `SIGMA` standard deviations.
    pub ci_low: f64,
    pub ci_high: f64,
    pub kraft_sum: f64,
    pub bound: f64,
    /// No significant violation: `ci_low <= bound`.
    pub satisfied: bool,
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Frequency of `D_B(P, P_theta_hat) - [(1/n) sum log(p / p_theta_hat) + (L + pseudo)(theta_hat)/n] >= t`
/// against `min(1, exp(-n t/2) * sum exp(-(L + pseudo)/2))`.
pub fn mc_tail_frequency(
    truth: &dyn DataGenerator,
    mle: &PenalizedMle,
    pseudo: Option<&[f64]>,
    t: f64,
    cfg: &McConfig,
) -> Result<TailReport> {
    cfg.validate(1)?;
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    let kraft = kraft_sum_values(mle.penalty(), pseudo)?;
    let bound = crate::bounds::tail_probability_bound(t, cfg.n, kraft.value)?;
    let reps = run_replicates(truth, mle, pseudo, cfg, true)?;
    let exceedances = reps.iter().filter(|r| !(r.excess < t)).count();
    let (ci_low, ci_high) = wilson_interval(exceedances, reps.len(), SIGMA);
    Ok(TailReport {
        n: cfg.n,
        t,
        reps: reps.len(),
        seed: cfg.seed,
        exceedances,
        frequency: exceedances as f64 / reps.len() as f64,
        ci_low,
        ci_high,
        kraft_sum: kraft.value,
        bound,
        satisfied: ci_low <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Penalty;
    use crate::grid::{EpsGrid, ParamBox};

    const G1: Family = Family::Gaussian { dim: 1 };

    fn mle(eps: f64) -> PenalizedMle {
        let g = EpsGrid::new(vec![0.0], eps, ParamBox::cube(1, -3.0, 3.0).unwrap()).unwrap();
        PenalizedMle::new(G1, &g, &Penalty::Zero).unwrap()
    }

    #[test]
    fn singleton_grid_has_zero_risk() {
        let truth = Member::new(G1, vec![0.0]).unwrap();
        let g = EpsGrid::new(vec![0.0], 1.0, ParamBox::cube(1, -0.5, 0.5).unwrap()).unwrap();
        let m = PenalizedMle::new(G1, &g, &Penalty::Zero).unwrap();
        let r = mc_risk(&truth, &m, None, &McConfig::new(10, 50, 1)).unwrap();
        assert_eq!(r.mc_risk, 0.0);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.entropy_hat, 0.0);
    }

    #[test]
    fn reproducible_across_runs() {
        let truth = Member::new(G1, vec![0.0]).unwrap();
        let m = mle((0.02f64).sqrt());
        let a = mc_risk(&truth, &m, None, &McConfig::new(100, 300, 7)).unwrap();
        let b = mc_risk(&truth, &m, None, &McConfig::new(100, 300, 7)).unwrap();
        assert_eq!(a, b);
        assert!(a.entropy_hat <= (a.distinct_estimates as f64).ln() + 1e-12);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(0, 10_000, 3.0);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 1e-3);
        let (lo, hi) = wilson_interval(50, 100, 3.0);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn deadline_in_the_past_aborts() {
        let truth = Member::new(G1, vec![0.0]).unwrap();
        let mut cfg = McConfig::new(10, 10, 1);
        cfg.deadline = Some(Instant::now() - std::time::Duration::from_secs(1));
        assert!(matches!(
            mc_risk(&truth, &mle(0.5), None, &cfg),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
