//! Randomized checks of the auxiliary inequalities behind the certificates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{invalid, Result};
use crate::grid::oracle::{sample_case, GridLemma, Verdict, DEFAULT_POINT_BUDGET};
use crate::grid::ParamBox;
use crate::models::{eigen_extremes, Family};
use crate::numeric::{distance, norm, squared_distance, squared_norm, stream_rng, CompensatedSum};

/// Every check the suite runs, in ledger order.
pub const CHECK_IDS: [&str; 22] = [
    "squared-norm",
    "quadratic-form",
    "log-sum",
    "median-mean",
    "jensen-difference",
    "infimum-on-grid",
    "exponential-affinity",
    "affinity-cauchy-schwarz",
    "affinity-first-moments",
    "affinity-median",
    "affinity-marginal-median",
    "entropy-extension",
    "entropy-extension-inequality",
    "entropy-extension-size",
    "grid-gaussian-sum",
    "grid-gaussian-sum-off-center",
    "grid-tail-sum-exact-gamma",
    "grid-tail-sum-stirling",
    "grid-power-sum",
    "grid-power-decay-large-n",
    "grid-power-decay-reversed",
    "grid-power-decay-middle",
];

/// One evaluated inequality `lhs <= rhs + tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Instance {
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
}

impl Instance {
    fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        Self { lhs, rhs, tol }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.tol
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaSuiteConfig {
    pub seed: u64,
    pub trials: usize,
    /// Restrict the run to these check ids.
    pub only: Option<Vec<String>>,
    pub grid_point_budget: f64,
    /// Failing inputs kept per check for replay.
    pub max_replays: usize,
}

impl LemmaSuiteConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        Self {
            seed,
            trials,
            only: None,
            grid_point_budget: DEFAULT_POINT_BUDGET,
            max_replays: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub trials: usize,
    pub failures: usize,
    /// Grid trials whose truncated sum could not decide the inequality.
    pub inconclusive: usize,
    /// Smallest `rhs - lhs` over all trials.
    pub worst_margin: f64,
    pub seed: u64,
    pub replays: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheckLedger {
    pub seed: u64,
    pub trials: usize,
    pub total_failures: usize,
    pub checks: Vec<CheckRecord>,
}

impl LemmaCheckLedger {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.check_id == id)
    }
}

type Trial = Result<(Instance, Value)>;

fn check_seed(seed: u64, index: usize) -> u64 {
    stream_rng(seed, 1_000_000 + index as u64).random()
}

pub fn lemma_suite(cfg: &LemmaSuiteConfig) -> Result<LemmaCheckLedger> {
    if cfg.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if let Some(only) = &cfg.only {
        if let Some(bad) = only.iter().find(|id| !CHECK_IDS.contains(&id.as_str())) {
            return Err(invalid("only", format!("unknown check id `{bad}`")));
        }
    }
    let mut checks = Vec::new();
    for (index, id) in CHECK_IDS.iter().enumerate() {
        if cfg
            .only
            .as_ref()
            .is_some_and(|o| !o.iter().any(|x| x == id))
        {
            continue;
        }
        let seed = check_seed(cfg.seed, index);
        let record = match id.strip_prefix("grid-").and_then(grid_lemma) {
            Some(lemma) => run_grid(id, lemma, seed, cfg),
            None => run_check(id, seed, cfg),
        };
        checks.push(record);
    }
    Ok(LemmaCheckLedger {
        seed: cfg.seed,
        trials: cfg.trials,
        total_failures: checks.iter().map(|c| c.failures).sum(),
        checks,
    })
}

fn grid_lemma(id: &str) -> Option<GridLemma> {
    GridLemma::ALL.into_iter().find(|l| l.id() == id)
}

fn run_check(id: &str, seed: u64, cfg: &LemmaSuiteConfig) -> CheckRecord {
    let f: fn(&mut ChaCha8Rng, usize) -> Trial = match id {
        "squared-norm" => squared_norm_trial,
        "quadratic-form" => quadratic_form_trial,
        "log-sum" => log_sum_trial,
        "median-mean" => median_mean_trial,
        "jensen-difference" => jensen_trial,
        "infimum-on-grid" => grid_infimum_trial,
        "exponential-affinity" => exponential_affinity_trial,
        "affinity-cauchy-schwarz" => cauchy_schwarz_trial,
        "affinity-first-moments" => first_moments_trial,
        "affinity-median" => median_affinity_trial,
        "affinity-marginal-median" => marginal_median_trial,
        "entropy-extension" => entropy_identity_trial,
        "entropy-extension-inequality" => entropy_inequality_trial,
        "entropy-extension-size" => entropy_size_trial,
        _ => unreachable!("unknown check {id}"),
    };
    let results: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| f(&mut stream_rng(seed, t as u64), t))
        .collect();
    let mut rec = CheckRecord {
        check_id: id.to_string(),
        trials: cfg.trials,
        failures: 0,
        inconclusive: 0,
        worst_margin: f64::INFINITY,
        seed,
        replays: Vec::new(),
    };
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok((inst, input)) => {
                rec.worst_margin = rec.worst_margin.min(inst.margin());
                if !inst.holds() {
                    rec.failures += 1;
                    if rec.replays.len() < cfg.max_replays {
                        rec.replays
                            .push(json!({"trial": t, "input": input, "instance": inst}));
                    }
                }
            }
            Err(e) => {
                rec.failures += 1;
                if rec.replays.len() < cfg.max_replays {
                    rec.replays
                        .push(json!({"trial": t, "error": e.to_string()}));
                }
            }
        }
    }
    rec
}

fn run_grid(id: &str, lemma: GridLemma, seed: u64, cfg: &LemmaSuiteConfig) -> CheckRecord {
    let results: Vec<Result<(Value, crate::grid::oracle::GridCheck)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let case = sample_case(lemma, &mut rng, cfg.grid_point_budget)?;
            let check = case.check()?;
            Ok((serde_json::to_value(&case).unwrap_or(Value::Null), check))
        })
        .collect();
    let mut rec = CheckRecord {
        check_id: id.to_string(),
        trials: cfg.trials,
        failures: 0,
        inconclusive: 0,
        worst_margin: f64::INFINITY,
        seed,
        replays: Vec::new(),
    };
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok((case, check)) => {
                rec.worst_margin = rec.worst_margin.min(check.margin);
                match check.verdict {
                    Verdict::Pass => {}
                    Verdict::Inconclusive => rec.inconclusive += 1,
                    Verdict::Violation => {
                        rec.failures += 1;
                        if rec.replays.len() < cfg.max_replays {
                            rec.replays
                                .push(json!({"trial": t, "case": case, "check": check}));
                        }
                    }
                }
            }
            Err(e) => {
                rec.failures += 1;
                if rec.replays.len() < cfg.max_replays {
                    rec.replays
                        .push(json!({"trial": t, "error": e.to_string()}));
                }
            }
        }
    }
    rec
}

// ---- random inputs ----

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normals(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * normal(rng)).collect()
}

fn uniforms(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn symmetric(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| scale * normal(rng));
    (&a + a.transpose()) * 0.5
}

fn probabilities(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k)
        .map(|_| -rng.random_range(f64::EPSILON..1.0).ln())
        .collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// A random family with bounded dimension: Gaussian (1..=3), Laplace (1..=2) or Bernoulli.
fn random_family(rng: &mut ChaCha8Rng, location_only: bool) -> Family {
    let k = if location_only {
        rng.random_range(0..2)
    } else {
        rng.random_range(0..3)
    };
    match k {
        0 => Family::Gaussian {
            dim: rng.random_range(1..=3),
        },
        1 => Family::Laplace {
            dim: rng.random_range(1..=2),
        },
        _ => Family::Bernoulli,
    }
}

fn random_param(rng: &mut ChaCha8Rng, fam: Family, half_width: f64) -> Vec<f64> {
    uniforms(rng, fam.dim(), -half_width, half_width)
}

fn mean_abs_deviation(fam: Family, theta: &[f64]) -> f64 {
    match fam.location_summary() {
        Some(s) => s.first_central_moment,
        None => {
            let p = fam.mean(theta)[0];
            2.0 * p * (1.0 - p)
        }
    }
}

fn affinity_tol(fam: Family) -> f64 {
    if fam.is_exponential() {
        1e-12
    } else {
        1e-8
    }
}

// ---- checks ----

fn squared_norm_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let d = rng.random_range(1..=10);
    let scale = log_uniform(rng, 1e-3, 1e3);
    let u = normals(rng, d, scale);
    let v = if trial.is_multiple_of(10) {
        u.iter().map(|x| -x).collect()
    } else {
        normals(rng, d, scale)
    };
    let rhs = 2.0 * squared_norm(&u) + 2.0 * squared_norm(&v);
    Ok((
        Instance::new(squared_distance(&u, &v), rhs, 1e-12 * rhs),
        json!({"u": u, "v": v}),
    ))
}

fn quadratic_form_trial(rng: &mut ChaCha8Rng, _trial: usize) -> Trial {
    let d = rng.random_range(1..=6);
    let scale = log_uniform(rng, 1e-2, 1e2);
    let m = symmetric(rng, d, scale);
    let v = DVector::from_vec(normals(rng, d, 1.0));
    let q = (v.transpose() * &m * &v)[(0, 0)] / v.norm_squared();
    let (lo, hi) = eigen_extremes(&m);
    let tol = 1e-10 * (lo.abs().max(hi.abs()) + 1.0);
    Ok((
        Instance::new((lo - q).max(q - hi), 0.0, tol),
        json!({"m": m.as_slice(), "d": d, "v": v.as_slice(), "quotient": q, "eigen_range": [lo, hi]}),
    ))
}

fn log_sum_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let k = rng.random_range(1..=12usize);
    let kf = k as f64;
    let scale = log_uniform(rng, 1e-3, 1e3);
    let a: Vec<f64> = (0..k)
        .map(|_| {
            if trial.is_multiple_of(5) || rng.random_bool(0.3) {
                1.0 / kf
            } else {
                1.0 / kf - scale * rng.random_range(f64::EPSILON..1.0).ln()
            }
        })
        .collect();
    let lhs = a.iter().sum::<f64>().ln();
    let rhs = a.iter().map(|x| x.ln()).sum::<f64>() + kf * kf.ln();
    Ok((
        Instance::new(lhs, rhs, 1e-12 * (1.0 + rhs.abs())),
        json!({"a": a}),
    ))
}

fn median_mean_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    match trial % 4 {
        0 => {
            let theta = rng.random_range(-4.0..4.0);
            let fam = Family::Bernoulli;
            let p = fam.mean(&[theta])[0];
            let median = if p > 0.5 { 1.0 } else { 0.0 };
            let lhs = (median - p).abs();
            let rhs = mean_abs_deviation(fam, &[theta]);
            Ok((
                Instance::new(lhs, rhs, 1e-14),
                json!({"family": fam, "theta": [theta]}),
            ))
        }
        1 => {
            let fam = random_family(rng, true);
            let theta = random_param(rng, fam, 5.0);
            // symmetric location families: median = mean = theta
            let lhs = distance(&theta, &fam.mean(&theta));
            let rhs = (fam.dim() as f64).sqrt() * mean_abs_deviation(fam, &theta);
            Ok((
                Instance::new(lhs, rhs, 1e-14),
                json!({"family": fam, "theta": theta}),
            ))
        }
        _ => {
            let d = rng.random_range(1..=4usize);
            let k = rng.random_range(1..=8usize);
            let pts: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    (0..d)
                        .map(|_| normal(rng) / rng.random_range(0.05..1.0))
                        .collect()
                })
                .collect();
            let p = probabilities(rng, k);
            let mean: Vec<f64> = (0..d)
                .map(|j| (0..k).map(|i| p[i] * pts[i][j]).sum())
                .collect();
            let median: Vec<f64> = (0..d)
                .map(|j| {
                    let mut order: Vec<usize> = (0..k).collect();
                    order.sort_by(|&a, &b| pts[a][j].total_cmp(&pts[b][j]));
                    let mut acc = 0.0;
                    for &i in &order {
                        acc += p[i];
                        if acc >= 0.5 {
                            return pts[i][j];
                        }
                    }
                    pts[order[k - 1]][j]
                })
                .collect();
            let mad: f64 = (0..k).map(|i| p[i] * distance(&pts[i], &mean)).sum();
            let lhs = distance(&median, &mean);
            let rhs = (d as f64).sqrt() * mad;
            Ok((
                Instance::new(lhs, rhs, 1e-12 * (1.0 + rhs)),
                json!({"points": pts, "p": p}),
            ))
        }
    }
}

fn jensen_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let case = trial % 3;
    let (d, pts, p) = {
        let d = if case == 2 {
            1
        } else {
            rng.random_range(1..=3usize)
        };
        let k = rng.random_range(1..=8usize);
        let spread = log_uniform(rng, 0.1, 4.0);
        let pts: Vec<Vec<f64>> = (0..k).map(|_| uniforms(rng, d, -spread, spread)).collect();
        (d, pts, probabilities(rng, k))
    };
    let k = pts.len();
    let ey: Vec<f64> = (0..d)
        .map(|j| (0..k).map(|i| p[i] * pts[i][j]).sum())
        .collect();
    let var: f64 = (0..k).map(|i| p[i] * squared_distance(&pts[i], &ey)).sum();
    let (f, lo, hi, input): (Box<dyn Fn(&[f64]) -> f64>, f64, f64, Value) = match case {
        0 => {
            let scale = log_uniform(rng, 0.1, 10.0);
            let s = symmetric(rng, d, scale);
            let b = normals(rng, d, 1.0);
            let (lo, hi) = eigen_extremes(&s);
            let input = json!({"hessian": s.as_slice(), "linear": b});
            let f = move |y: &[f64]| {
                let v = DVector::from_column_slice(y);
                0.5 * (v.transpose() * &s * &v)[(0, 0)]
                    + b.iter().zip(y).map(|(a, c)| a * c).sum::<f64>()
            };
            (Box::new(f), lo, hi, input)
        }
        1 => {
            let fam = Family::Gaussian { dim: d };
            (
                Box::new(move |y: &[f64]| fam.log_partition(y).unwrap()),
                1.0,
                1.0,
                json!({"family": fam}),
            )
        }
        _ => {
            let fam = Family::Bernoulli;
            let ymin = pts.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
            let ymax = pts.iter().map(|x| x[0]).fold(f64::NEG_INFINITY, f64::max);
            let curv = |t: f64| {
                let s = 1.0 / (1.0 + (-t).exp());
                s * (1.0 - s)
            };
            let lo = curv(ymin).min(curv(ymax));
            let hi = curv(0f64.clamp(ymin, ymax));
            (
                Box::new(move |y: &[f64]| fam.log_partition(y).unwrap()),
                lo,
                hi,
                json!({"family": fam}),
            )
        }
    };
    let ef: f64 = pts
        .iter()
        .zip(&p)
        .map(|(y, w)| w * f(y))
        .collect::<CompensatedSum>()
        .value();
    let jd = ef - f(&ey);
    let tol = 1e-10 * (1.0 + ef.abs() + (lo.abs() + hi.abs()) * var);
    Ok((
        Instance::new((0.5 * lo * var - jd).max(jd - 0.5 * hi * var), 0.0, tol),
        json!({"points": pts, "p": p, "f": input, "jensen_difference": jd, "variance": var}),
    ))
}

fn grid_infimum_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let d = rng.random_range(1..=3usize);
    let scale = log_uniform(rng, 0.1, 10.0);
    let s = symmetric(rng, d, scale);
    let b = normals(rng, d, 1.0);
    let a = if trial.is_multiple_of(2) {
        0.0
    } else {
        rng.random_range(-1.0..1.0)
    };
    let omega = uniforms(rng, d, 0.5, 3.0);
    let eps = log_uniform(rng, 0.05, 2.0);
    let offset = uniforms(rng, d, 0.0, eps);
    let theta = uniforms(rng, d, -3.0, 3.0);
    let f = |x: &[f64]| {
        let v = DVector::from_column_slice(x);
        0.5 * (v.transpose() * &s * &v)[(0, 0)]
            + b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
            + a * x
                .iter()
                .zip(&omega)
                .map(|(xi, w)| (w * xi).sin())
                .sum::<f64>()
    };
    // the 2^d corners of the lattice cell holding theta all lie within eps sqrt(d)
    let base: Vec<f64> = (0..d)
        .map(|j| offset[j] + eps * ((theta[j] - offset[j]) / eps).floor())
        .collect();
    let mut best = f64::INFINITY;
    for mask in 0..(1usize << d) {
        let c: Vec<f64> = (0..d)
            .map(|j| base[j] + if mask >> j & 1 == 1 { eps } else { 0.0 })
            .collect();
        best = best.min(f(&c));
    }
    let delta2 = eps * eps * d as f64;
    let w2 = omega.iter().fold(0.0f64, |m, w| m.max(w * w));
    let lambda = (eigen_extremes(&s).1 + a.abs() * w2).max(0.0);
    let ft = f(&theta);
    let rhs = ft + 0.5 * delta2 * lambda;
    Ok((
        Instance::new(best, rhs, 1e-10 * (1.0 + ft.abs())),
        json!({"hessian": s.as_slice(), "linear": b, "amplitude": a, "omega": omega, "eps": eps, "offset": offset, "theta": theta}),
    ))
}

fn exponential_affinity_trial(rng: &mut ChaCha8Rng, _trial: usize) -> Trial {
    let fam = if rng.random_bool(0.5) {
        Family::Bernoulli
    } else {
        Family::Gaussian {
            dim: rng.random_range(1..=3),
        }
    };
    let d = fam.dim();
    let lo = uniforms(rng, d, -6.0, 0.0);
    let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.1..6.0)).collect();
    let a: Vec<f64> = (0..d).map(|j| rng.random_range(lo[j]..hi[j])).collect();
    let b: Vec<f64> = (0..d).map(|j| rng.random_range(lo[j]..hi[j])).collect();
    let domain = ParamBox::new(lo.clone(), hi.clone())?;
    let c = fam.gaussian_decay_constant(&domain)?;
    let lhs = fam.hellinger_affinity(&a, &b)?;
    let rhs = (-c * squared_distance(&a, &b)).exp();
    Ok((
        Instance::new(lhs, rhs, 1e-12),
        json!({"family": fam, "box": [lo, hi], "a": a, "b": b, "c": c}),
    ))
}

fn cauchy_schwarz_trial(rng: &mut ChaCha8Rng, _trial: usize) -> Trial {
    let fam = random_family(rng, false);
    let a = random_param(rng, fam, 3.0);
    let b = random_param(rng, fam, 3.0);
    let j = rng.random_range(0..fam.dim());
    let s = if fam == Family::Bernoulli {
        rng.random_range(-0.5..1.5)
    } else {
        rng.random_range(a[j].min(b[j]) - 3.0..a[j].max(b[j]) + 3.0)
    };
    let ph = fam.marginal_cdf(&a, j, s);
    let qh = fam.marginal_cdf(&b, j, s);
    let lhs = fam.hellinger_affinity(&a, &b)?;
    let rhs = (ph * qh).sqrt() + ((1.0 - ph) * (1.0 - qh)).sqrt();
    Ok((
        Instance::new(lhs, rhs, affinity_tol(fam)),
        json!({"family": fam, "p": a, "q": b, "coordinate": j, "cut": s}),
    ))
}

/// `A(P, Q) <= 2 (E||X - EX|| + E||Y - EY||) / ||EX - EY||` for two members of `fam`.
pub fn first_moments_instance(fam: Family, a: &[f64], b: &[f64]) -> Result<Instance> {
    let lhs = fam.hellinger_affinity(a, b)?;
    let gap = distance(&fam.mean(a), &fam.mean(b));
    let rhs = 2.0 * (mean_abs_deviation(fam, a) + mean_abs_deviation(fam, b)) / gap;
    Ok(Instance::new(lhs, rhs, affinity_tol(fam)))
}

fn first_moments_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let (fam, a, b) = if trial == 0 {
        (Family::Laplace { dim: 1 }, vec![0.0], vec![8.0])
    } else {
        let fam = random_family(rng, false);
        let w = if fam == Family::Bernoulli { 4.0 } else { 8.0 };
        (fam, random_param(rng, fam, w), random_param(rng, fam, w))
    };
    let inst = first_moments_instance(fam, &a, &b)?;
    Ok((inst, json!({"family": fam, "p": a, "q": b})))
}

/// `A(P, Q) <= exp(-z^2/2)` with `z = Q(m_P, m_Q]` for one-dimensional location members.
pub fn median_affinity_instance(fam: Family, a: f64, b: f64) -> Result<Instance> {
    if !fam.is_location() || fam.dim() != 1 {
        return Err(invalid(
            "family",
            "median affinity check needs a one-dimensional location family",
        ));
    }
    let z = (0.5 - fam.marginal_cdf(&[b], 0, a)).abs();
    let lhs = fam.hellinger_affinity(&[a], &[b])?;
    Ok(Instance::new(lhs, (-0.5 * z * z).exp(), affinity_tol(fam)))
}

fn median_affinity_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let (fam, a, b) = if trial == 0 {
        (Family::Laplace { dim: 1 }, 0.0, 1.0)
    } else {
        let fam = if rng.random_bool(0.5) {
            Family::Gaussian { dim: 1 }
        } else {
            Family::Laplace { dim: 1 }
        };
        (
            fam,
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        )
    };
    Ok((
        median_affinity_instance(fam, a, b)?,
        json!({"family": fam, "p": a, "q": b}),
    ))
}

fn marginal_median_trial(rng: &mut ChaCha8Rng, _trial: usize) -> Trial {
    let fam = random_family(rng, true);
    let d = fam.dim();
    let radius = rng.random_range(0.05..5.0);
    let a = random_param(rng, fam, 3.0);
    let dir = normals(rng, d, 1.0);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    let nd = norm(&dir).max(f64::MIN_POSITIVE);
    let b: Vec<f64> = (0..d).map(|j| a[j] + r * dir[j] / nd).collect();
    // symmetric unimodal marginals: the minimum on [m - R, m + R] sits at the ends
    let qmin = (0..d)
        .map(|j| fam.marginal_density(&b, j, b[j] + radius).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    let c = qmin * qmin / (2.0 * d as f64);
    let lhs = fam.hellinger_affinity(&a, &b)?;
    let rhs = (-c * squared_distance(&a, &b)).exp();
    Ok((
        Instance::new(lhs, rhs, affinity_tol(fam)),
        json!({"family": fam, "p": a, "q": b, "radius": radius, "c": c}),
    ))
}

fn entropy(q: &[f64]) -> f64 {
    q.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .collect::<CompensatedSum>()
        .value()
}

fn random_measure(rng: &mut ChaCha8Rng, k: usize, mass: f64) -> Vec<f64> {
    let mut w = probabilities(rng, k);
    for x in w.iter_mut() {
        if k > 1 && rng.random_bool(0.1) {
            *x = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        w[0] = 1.0;
        return w.iter().map(|x| x * mass).collect();
    }
    w.iter().map(|x| mass * x / s).collect()
}

fn entropy_identity_trial(rng: &mut ChaCha8Rng, _trial: usize) -> Trial {
    let k = rng.random_range(1..=20usize);
    let mass = log_uniform(rng, 1e-3, 5.0);
    let q = random_measure(rng, k, mass);
    let total: f64 = q.iter().copied().collect::<CompensatedSum>().value();
    let norm_q: Vec<f64> = q.iter().map(|x| x / total).collect();
    let h = entropy(&q);
    let rhs = total * entropy(&norm_q) + total * (1.0 / total).ln();
    let tol = 1e-12 * (1.0 + h.abs() + rhs.abs());
    Ok((Instance::new((h - rhs).abs(), 0.0, tol), json!({"q": q})))
}

fn entropy_inequality_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let k = rng.random_range(1..=20usize);
    let mass = if trial.is_multiple_of(10) {
        (-1.0f64).exp()
    } else {
        rng.random_range(1e-6..=1.0)
    };
    let q = random_measure(rng, k, mass);
    let total: f64 = q.iter().sum();
    let norm_q: Vec<f64> = q.iter().map(|x| x / total).collect();
    let lhs = entropy(&q);
    let rhs = entropy(&norm_q) + (-1.0f64).exp();
    Ok((
        Instance::new(lhs, rhs, 1e-12 * (1.0 + rhs)),
        json!({"q": q}),
    ))
}

fn entropy_size_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let k = rng.random_range(3..=50usize);
    let q = if trial.is_multiple_of(10) {
        vec![1.0 / k as f64; k]
    } else {
        let mass = rng.random_range(1e-6..=1.0);
        random_measure(rng, k, mass)
    };
    let lhs = entropy(&q);
    let rhs = (k as f64).ln();
    Ok((
        Instance::new(lhs, rhs, 1e-12 * (1.0 + rhs)),
        json!({"q": q}),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_instances() {
        let l1 = Family::Laplace { dim: 1 };
        let fm = first_moments_instance(l1, &[0.0], &[8.0]).unwrap();
        assert!((fm.lhs - 0.091_578).abs() < 5e-7 && fm.rhs == 0.5 && fm.holds());
        let md = median_affinity_instance(l1, 0.0, 1.0).unwrap();
        assert!((md.lhs - 0.909_796).abs() < 5e-7);
        assert!((md.rhs - 0.951_279_793_325_973_8).abs() < 1e-15 && md.holds());
    }

    #[test]
    fn small_suite_passes_without_grid() {
        let mut cfg = LemmaSuiteConfig::new(11, 50);
        cfg.only = Some(
            CHECK_IDS
                .iter()
                .filter(|c| !c.starts_with("grid-"))
                .map(|s| s.to_string())
                .collect(),
        );
        let ledger = lemma_suite(&cfg).unwrap();
        for c in &ledger.checks {
            assert_eq!(c.failures, 0, "{} {:?}", c.check_id, c.replays);
        }
        assert_eq!(ledger.checks.len(), 14);
        let again = lemma_suite(&cfg).unwrap();
        assert_eq!(ledger, again);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(lemma_suite(&LemmaSuiteConfig::new(1, 0)).is_err());
    }
}
