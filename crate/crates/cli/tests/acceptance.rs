//! Acceptance criteria, one line each. Runs without the libtest harness so the lines
//! land in the `cargo test` output.
//!
//! A criterion that fails only through a known-false inequality is reported as FAIL but
//! does not fail the process; any other failure does.

use std::time::{Duration, Instant};

use rand::Rng;
use resolv_core::bounds::{
    gaussian_decay_certificate, gaussian_decay_concrete_certificate, minimax_certificate,
    penalty_pseudo_certificate, resolvability_index, DecayConstant, Expectation, TheoremId,
};
use resolv_core::numeric::stream_rng;
use resolv_core::verify::{
    first_moments_instance, lemma_suite, mc_risk, mc_tail_frequency, median_affinity_instance,
    LemmaSuiteConfig, McConfig,
};
use resolv_core::{CodelengthMode, EpsGrid, Family, Member, ParamBox, PenalizedMle, Penalty};
use serde_json::Value;

const REPS: usize = 2000;
const SEED: u64 = 20_240_601;

// Recomputed at high precision: 4 log(1 + 4 sqrt 8)/100 and the same plus 4 (1/8)/100.
const CONCRETE_D1_N100: f64 = 0.1004285261553361;
const MINIMAX_D1_N100: f64 = 0.1054285261553361;

const EXACT_TOL: f64 = 1e-12;
const QUADRATURE_TOL: f64 = 1e-6;
const SOUNDNESS_BUDGET: Duration = Duration::from_secs(60);
const GRID_BUDGET: Duration = Duration::from_secs(120);

/// Checks whose stated inequality is false for some admissible inputs.
const KNOWN_FALSE: [&str; 2] = ["affinity-first-moments", "grid-power-decay-middle"];

enum Outcome {
    Pass(String),
    Fail(String),
    KnownDefect(String),
}

type Res = Result<Outcome, Box<dyn std::error::Error>>;

fn gaussian(d: usize) -> Family {
    Family::Gaussian { dim: d }
}

fn sqrt_rule_grid(d: usize, n: usize, half_width: f64) -> EpsGrid {
    let eps = (2.0 / n as f64).sqrt();
    EpsGrid::new(
        vec![0.0; d],
        eps,
        ParamBox::cube(d, -half_width, half_width).unwrap(),
    )
    .unwrap()
}

fn soundness() -> Res {
    let mut worst = f64::INFINITY;
    let mut notes = Vec::new();
    for d in [1usize, 2] {
        for n in [25usize, 100, 400] {
            let start = Instant::now();
            let fam = gaussian(d);
            let grid = sqrt_rule_grid(d, n, 3.0);
            let eps = grid.spacing();
            // On-grid truth away from the origin.
            let theta: Vec<f64> = (0..d)
                .map(|j| if j == 0 { eps } else { -2.0 * eps })
                .collect();
            let truth = Member::new(fam, theta)?;
            let res = resolvability_index(&grid, &Penalty::Zero, &truth, n)?;
            if res.divergence > EXACT_TOL {
                return Ok(Outcome::Fail(format!("truth not on grid (d={d}, n={n})")));
            }
            let c = DecayConstant::certified(fam, grid.domain())?;
            let cert = gaussian_decay_concrete_certificate(d, n, c, res.divergence)?;
            let mle = PenalizedMle::new(fam, &grid, &Penalty::Zero)?;
            let mut risk = mc_risk(&truth, &mle, None, &McConfig::new(n, REPS, SEED))?;
            let cmp = risk.compare(&cert);
            let elapsed = start.elapsed();
            if !cmp.satisfied {
                return Ok(Outcome::Fail(format!(
                    "d={d} n={n}: mc {:.6} + 3se {:.6} > certificate {:.6}",
                    risk.mc_risk,
                    3.0 * risk.stderr,
                    cert.value
                )));
            }
            if elapsed > SOUNDNESS_BUDGET {
                return Ok(Outcome::Fail(format!("d={d} n={n} took {elapsed:?}")));
            }
            if d == 1 && n == 100 && (cert.value - CONCRETE_D1_N100).abs() > EXACT_TOL {
                return Ok(Outcome::Fail(format!(
                    "certificate {} != {CONCRETE_D1_N100}",
                    cert.value
                )));
            }
            worst = worst.min(cmp.margin / cert.value);
            notes.push(format!("{:.4}/{:.4}", risk.upper(), cert.value));
        }
    }
    Ok(Outcome::Pass(format!(
        "6 configurations, upper/certificate {}, smallest relative margin {worst:.3}",
        notes.join(" ")
    )))
}

fn affinity_exactness() -> Res {
    let mut rng = stream_rng(SEED, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (fam, a, b) = if rng.random_bool(0.5) {
            let d = rng.random_range(1..=3);
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            (gaussian(d), a, b)
        } else {
            (
                Family::Bernoulli,
                vec![rng.random_range(-4.0..4.0)],
                vec![rng.random_range(-4.0..4.0)],
            )
        };
        let closed = (-fam.jensen_gap(&a, &b)?).exp();
        let quad = fam.affinity_by_quadrature(&a, &b)?.value;
        worst = worst.max((closed - quad).abs());
    }
    if worst > QUADRATURE_TOL {
        return Ok(Outcome::Fail(format!(
            "closed form vs quadrature differ by {worst:e}"
        )));
    }
    let fam = gaussian(2);
    let c = fam.gaussian_decay_constant(&ParamBox::cube(2, -3.0, 3.0)?)?;
    let mut eq_worst: f64 = 0.0;
    for _ in 0..100 {
        let a: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let b = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let dist2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        eq_worst = eq_worst.max(((-c * dist2).exp() - fam.hellinger_affinity(&a, &b)?).abs());
    }
    if (c - 0.125).abs() > EXACT_TOL || eq_worst > EXACT_TOL {
        return Ok(Outcome::Fail(format!(
            "unit Gaussian: c = {c}, equality gap {eq_worst:e}"
        )));
    }
    Ok(Outcome::Pass(format!(
        "100 pairs, max |closed - quadrature| = {worst:.2e}; c = 1/8 equality gap {eq_worst:.2e}"
    )))
}

fn ledger_failures(ledger: &resolv_core::verify::LemmaCheckLedger) -> Vec<(String, usize)> {
    ledger
        .checks
        .iter()
        .filter(|c| c.failures > 0)
        .map(|c| (c.check_id.clone(), c.failures))
        .collect()
}

fn classify(failures: &[(String, usize)], inconclusive: usize, pass_note: String) -> Outcome {
    let list = failures
        .iter()
        .map(|(id, k)| format!("{id}: {k}"))
        .collect::<Vec<_>>()
        .join(", ");
    if failures.is_empty() && inconclusive == 0 {
        Outcome::Pass(pass_note)
    } else if inconclusive == 0
        && failures
            .iter()
            .all(|(id, _)| KNOWN_FALSE.contains(&id.as_str()))
    {
        Outcome::KnownDefect(format!("violations in {list}"))
    } else {
        Outcome::Fail(format!(
            "violations in [{list}], {inconclusive} inconclusive"
        ))
    }
}

fn grid_dominance() -> Res {
    let start = Instant::now();
    let mut cfg = LemmaSuiteConfig::new(SEED, 500);
    cfg.only = Some(
        resolv_core::verify::CHECK_IDS
            .iter()
            .filter(|id| id.starts_with("grid-"))
            .map(|s| s.to_string())
            .collect(),
    );
    let ledger = lemma_suite(&cfg)?;
    let elapsed = start.elapsed();
    if elapsed > GRID_BUDGET {
        return Ok(Outcome::Fail(format!("took {elapsed:?}")));
    }
    let inconclusive = ledger.checks.iter().map(|c| c.inconclusive).sum();
    Ok(classify(
        &ledger_failures(&ledger),
        inconclusive,
        format!(
            "{} lemmas x 500 configurations, 0 violations in {elapsed:.1?}",
            ledger.checks.len()
        ),
    ))
}

fn tail_bound() -> Res {
    let n = 100;
    let fam = gaussian(1);
    let grid = EpsGrid::new(vec![0.0], 0.1, ParamBox::cube(1, -2.0, 2.0)?)?;
    let m = grid.enumerate_points()?.len();
    let penalty = Penalty::uniform_codelength(m, CodelengthMode::Twice);
    let mle = PenalizedMle::new(fam, &grid, &penalty)?;
    let truth = Member::new(fam, vec![0.37])?;
    let report = mc_tail_frequency(&truth, &mle, None, 0.2, &McConfig::new(n, 10_000, SEED))?;
    if (report.kraft_sum - 1.0).abs() > EXACT_TOL {
        return Ok(Outcome::Fail(format!("Kraft sum {}", report.kraft_sum)));
    }
    let line = format!(
        "{} exceedances in {} reps, Wilson 3-sigma [{:.2e}, {:.2e}], bound {:.3e}",
        report.exceedances, report.reps, report.ci_low, report.ci_high, report.bound
    );
    Ok(if report.satisfied {
        Outcome::Pass(line)
    } else {
        Outcome::Fail(line)
    })
}

fn scaling() -> Res {
    let sizes = [25usize, 100, 400, 1600];
    let fam = gaussian(1);
    let truth = Member::new(fam, vec![0.0])?;
    let mut scaled: Vec<[f64; 3]> = Vec::new();
    let mut risks = Vec::new();
    for &n in &sizes {
        let grid = sqrt_rule_grid(1, n, 3.0);
        let res = resolvability_index(&grid, &Penalty::Zero, &truth, n)?;
        let c = DecayConstant::certified(fam, grid.domain())?;
        let concrete = gaussian_decay_concrete_certificate(1, n, c, res.divergence)?;
        let general =
            gaussian_decay_certificate(grid.spacing(), 1, n, c, res.value, Expectation::zero())?;
        let minimax = minimax_certificate(fam.kl_net_beta(), c.c, 1, n)?;
        let nf = n as f64;
        scaled.push([concrete.value * nf, general.value * nf, minimax.value * nf]);
        let mle = PenalizedMle::new(fam, &grid, &Penalty::Zero)?;
        risks.push(mc_risk(&truth, &mle, None, &McConfig::new(n, REPS, SEED))?.mc_risk);
    }
    for k in 0..3 {
        let base = scaled[0][k];
        for s in &scaled[1..] {
            if ((s[k] - base) / base).abs() > EXACT_TOL {
                return Ok(Outcome::Fail(format!(
                    "n * certificate drifts: {} vs {base}",
                    s[k]
                )));
            }
        }
    }
    if !risks.windows(2).all(|w| w[1] < w[0]) {
        return Ok(Outcome::Fail(format!("MC risk not decreasing: {risks:?}")));
    }
    let shown: Vec<String> = risks.iter().map(|r| format!("{r:.2e}")).collect();
    Ok(Outcome::Pass(format!(
        "n * certificate = {:.6} (concrete), {:.6} (general), {:.6} (minimax); MC risk {}",
        scaled[0][0],
        scaled[0][1],
        scaled[0][2],
        shown.join(" > ")
    )))
}

fn lemma_oracles() -> Res {
    let fm = first_moments_instance(Family::Laplace { dim: 1 }, &[0.0], &[8.0])?;
    let med = median_affinity_instance(Family::Laplace { dim: 1 }, 0.0, 1.0)?;
    if !fm.holds() || (fm.rhs - 0.5).abs() > EXACT_TOL || (fm.lhs - 0.091578).abs() > 5e-7 {
        return Ok(Outcome::Fail(format!(
            "first-moments instance {} <= {}",
            fm.lhs, fm.rhs
        )));
    }
    if !med.holds()
        || (med.lhs - 0.909796).abs() > 5e-7
        || (med.rhs - 0.9512797933259738).abs() > EXACT_TOL
    {
        return Ok(Outcome::Fail(format!(
            "median instance {} <= {}",
            med.lhs, med.rhs
        )));
    }

    let dir = tempfile::tempdir()?;
    let out = dir.path().to_str().ok_or("non-utf8 temp path")?;
    let code = resolv_cli::run([
        "resolv",
        "verify-lemmas",
        "--trials",
        "1000",
        "--seed",
        "0",
        "--out",
        out,
    ]);
    let ledger: Value =
        serde_json::from_reader(std::fs::File::open(dir.path().join("lemma_ledger.json"))?)?;
    let checks = ledger["checks"].as_array().ok_or("ledger without checks")?;
    let failures: Vec<(String, usize)> = checks
        .iter()
        .filter(|c| c["failures"].as_u64() > Some(0))
        .map(|c| {
            (
                c["check_id"].as_str().unwrap_or("?").to_string(),
                c["failures"].as_u64().unwrap_or(0) as usize,
            )
        })
        .collect();
    let inconclusive = checks
        .iter()
        .map(|c| c["inconclusive"].as_u64().unwrap_or(0) as usize)
        .sum();
    let expected_code = if failures.is_empty() {
        resolv_cli::EXIT_OK
    } else {
        resolv_cli::EXIT_VIOLATION
    };
    if code != expected_code {
        return Ok(Outcome::Fail(format!("verify-lemmas exited {code}")));
    }
    Ok(classify(
        &failures,
        inconclusive,
        format!(
            "{} checks x 1000 trials, 0 failures; Laplace instances {:.6} <= 0.5, {:.6} <= {:.6}",
            checks.len(),
            fm.lhs,
            med.lhs,
            med.rhs
        ),
    ))
}

fn minimax() -> Res {
    let cert = minimax_certificate(0.125, 0.125, 1, 100)?;
    if (cert.value - MINIMAX_D1_N100).abs() > EXACT_TOL {
        return Ok(Outcome::Fail(format!(
            "minimax {} != {MINIMAX_D1_N100}",
            cert.value
        )));
    }
    let n = 100;
    let fam = gaussian(1);
    let grid = sqrt_rule_grid(1, n, 3.0);
    let eps = grid.spacing();
    let mle = PenalizedMle::new(fam, &grid, &Penalty::Zero)?;
    let mut rng = stream_rng(SEED, 7);
    let mut thetas: Vec<f64> = (0..12).map(|_| rng.random_range(-2.5..2.5)).collect();
    thetas.extend([0.0, 3.0 * eps, -7.0 * eps, 0.5 * eps]);
    let mut worst = f64::NEG_INFINITY;
    let mut mean = 0.0;
    for (i, &t) in thetas.iter().enumerate() {
        let truth = Member::new(fam, vec![t])?;
        let risk = mc_risk(&truth, &mle, None, &McConfig::new(n, REPS, SEED + i as u64))?;
        worst = worst.max(risk.upper());
        mean += risk.mc_risk / thetas.len() as f64;
    }
    let line = format!(
        "value {:.16}; {} truths, worst mc+3se {worst:.5}, average risk {mean:.5}",
        cert.value,
        thetas.len()
    );
    Ok(if worst <= cert.value {
        Outcome::Pass(line)
    } else {
        Outcome::Fail(line)
    })
}

fn map_corollary() -> Res {
    let n = 100;
    let fam = gaussian(1);
    let grid = EpsGrid::new(vec![0.0], 0.02, ParamBox::cube(1, -1.0, 1.0)?)?;
    let points = grid.enumerate_points()?;
    if points.len() != 101 {
        return Ok(Outcome::Fail(format!("grid has {} points", points.len())));
    }
    let penalty = Penalty::uniform_codelength(101, CodelengthMode::Map);
    let truth = Member::new(fam, vec![0.131])?;
    let res = resolvability_index(&grid, &penalty, &truth, n)?;
    let ln_m = 101f64.ln();
    let cert = penalty_pseudo_certificate(
        &points,
        &penalty,
        1.0,
        Expectation::exact(ln_m),
        res.value,
        n,
    )?;
    let expected = res.value + ln_m / n as f64;
    if cert.theorem_id != TheoremId::Map || (cert.value - expected).abs() > EXACT_TOL {
        return Ok(Outcome::Fail(format!(
            "{} = {} vs {expected}",
            cert.theorem_id, cert.value
        )));
    }
    let mle = PenalizedMle::new(fam, &grid, &penalty)?;
    let mut risk = mc_risk(&truth, &mle, None, &McConfig::new(n, REPS, SEED))?;
    let cmp = risk.compare(&cert);
    let line = format!(
        "certificate {:.6} = R + ln(101)/n; mc+3se {:.6}",
        cert.value,
        risk.upper()
    );
    Ok(if cmp.satisfied {
        Outcome::Pass(line)
    } else {
        Outcome::Fail(line)
    })
}

fn main() {
    let criteria: [(&str, fn() -> Res); 8] = [
        ("certificate soundness", soundness),
        ("exponential-family affinity", affinity_exactness),
        ("grid-summation dominance", grid_dominance),
        ("tail bound", tail_bound),
        ("1/n scaling", scaling),
        ("lemma oracle suite", lemma_oracles),
        ("minimax reproduction", minimax),
        ("MAP corollary", map_corollary),
    ];
    let mut passed = 0;
    let mut unexpected = 0;
    println!("acceptance criteria");
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f().unwrap_or_else(|e| Outcome::Fail(format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => {
                passed += 1;
                ("PASS", d)
            }
            Outcome::KnownDefect(d) => (
                "FAIL",
                format!("{d} (stated inequality is false; see README)"),
            ),
            Outcome::Fail(d) => {
                unexpected += 1;
                ("FAIL", d)
            }
        };
        println!("  [{tag}] {} {name} ({secs:.1}s): {detail}", i + 1);
    }
    println!(
        "{passed} of {} criteria pass, {unexpected} unexpected failures",
        criteria.len()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
