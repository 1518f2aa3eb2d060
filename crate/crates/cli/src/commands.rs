use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use resolv_core::bounds::{Resolvability, TheoremId};
use resolv_core::verify::{
    lemma_suite, mc_risk as run_mc, mc_tail_frequency, LemmaCheckLedger, LemmaSuiteConfig,
    McConfig, RiskReport, TailReport, CHECK_IDS,
};
use resolv_core::Error;
use serde::Serialize;

use crate::certs::{CertificateSet, SizeContext};
use crate::config::{ConfigError, ExperimentConfig};
use crate::{ExperimentArgs, LemmaArgs, EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Complete,
    BudgetExceeded,
}

#[derive(Serialize)]
struct Estimate {
    ordinal: usize,
    theta: Vec<f64>,
    objective: f64,
}

#[derive(Serialize)]
struct CertifySize {
    n: usize,
    eps: f64,
    grid_points: usize,
    resolvability: Option<Resolvability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<Estimate>,
    #[serde(flatten)]
    set: CertificateSet,
}

#[derive(Serialize)]
struct CertifyBundle<'a> {
    format: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    sizes: Vec<CertifySize>,
}

#[derive(Serialize)]
struct McSize {
    n: usize,
    eps: f64,
    grid_points: usize,
    risk: RiskReport,
    #[serde(flatten)]
    set: CertificateSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail: Option<TailReport>,
}

#[derive(Serialize)]
struct McBundle<'a> {
    format: &'static str,
    version: &'static str,
    status: Status,
    config: &'a ExperimentConfig,
    sizes: Vec<McSize>,
}

#[derive(Serialize)]
struct LemmaBundle {
    format: &'static str,
    version: &'static str,
    status: Status,
    #[serde(flatten)]
    ledger: LemmaCheckLedger,
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    n: usize,
    eps: f64,
    reps: usize,
    seed: u64,
    mc_risk: f64,
    stderr: f64,
    certificate_id: &'a str,
    certificate_value: f64,
    satisfied: bool,
    margin: f64,
}

fn fail(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn deadline(secs: Option<f64>) -> Result<Option<Instant>, ConfigError> {
    match secs {
        None => Ok(None),
        Some(s) if s >= 0.0 && s.is_finite() => {
            Ok(Some(Instant::now() + Duration::from_secs_f64(s)))
        }
        Some(s) => Err(ConfigError(format!(
            "--budget-seconds must be finite and >= 0, got {s}"
        ))),
    }
}

fn expired(d: Option<Instant>) -> bool {
    d.is_some_and(|d| Instant::now() >= d)
}

fn load(
    args: &ExperimentArgs,
) -> Result<(ExperimentConfig, Option<PathBuf>, Vec<TheoremId>), ConfigError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.dir.clone()));
    let (theorems, _) = cfg.certificates.theorems().map_err(ConfigError)?;
    Ok((cfg, out, theorems))
}

fn write_json(path: &Path, value: &impl Serialize) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()
}

fn prepare_dir(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)
}

pub fn certify(args: &ExperimentArgs) -> i32 {
    let (cfg, out, theorems) = match load(args) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    let sample = match cfg.load_sample() {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let sizes: Vec<usize> = match &sample {
        Some(s) => vec![s.len()],
        None => cfg.n.clone(),
    };
    let mut results = Vec::with_capacity(sizes.len());
    for n in sizes {
        let ctx = match SizeContext::new(&cfg, n) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let estimate = match &sample {
            Some(s) => match ctx
                .estimator()
                .and_then(|m| m.fit(s).map_err(|e| ConfigError(e.to_string())))
            {
                Ok(f) => Some(Estimate {
                    ordinal: f.ordinal,
                    theta: f.theta,
                    objective: f.objective,
                }),
                Err(e) => return fail(e),
            },
            None => None,
        };
        results.push(CertifySize {
            n,
            eps: ctx.eps,
            grid_points: ctx.points.len(),
            resolvability: ctx.resolvability.clone(),
            estimate,
            set: ctx.certificates(&theorems, None),
        });
    }
    let bundle = CertifyBundle {
        format: "resolv.certificates/1",
        version: VERSION,
        config: &cfg,
        sizes: results,
    };
    let written = match &out {
        Some(dir) => {
            prepare_dir(dir).and_then(|_| write_json(&dir.join("certificates.json"), &bundle))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, &bundle)
                .map_err(std::io::Error::from)
                .and_then(|_| lock.write_all(b"\n"))
        }
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => fail(e),
    }
}

pub fn mc_risk(args: &ExperimentArgs) -> i32 {
    let (cfg, out, theorems) = match load(args) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    if cfg.sample_path.is_some() {
        return fail("mc-risk needs `theta`; an external sample is accepted by certify only");
    }
    let deadline = match deadline(args.budget_seconds) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let truth = cfg.truth().expect("validated");
    let mut status = Status::Complete;
    let mut sizes = Vec::with_capacity(cfg.n.len());
    for &n in &cfg.n {
        if expired(deadline) {
            status = Status::BudgetExceeded;
            break;
        }
        let ctx = match SizeContext::new(&cfg, n) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let mle = match ctx.estimator() {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let mc_cfg = McConfig {
            n,
            reps: cfg.reps,
            seed: cfg.seed,
            deadline,
        };
        let mut risk = match run_mc(&truth, &mle, ctx.pseudo_slice(), &mc_cfg) {
            Ok(r) => r,
            Err(Error::BudgetExceeded { .. }) => {
                status = Status::BudgetExceeded;
                break;
            }
            Err(e) => return fail(format!("n = {n}: {e}")),
        };
        let set = ctx.certificates(&theorems, Some(&risk));
        for c in &set.certificates {
            risk.compare(c);
        }
        let tail = match &cfg.tail {
            Some(t) => {
                let tc = McConfig {
                    reps: t.reps.unwrap_or(cfg.reps),
                    ..mc_cfg
                };
                match mc_tail_frequency(&truth, &mle, ctx.pseudo_slice(), t.t, &tc) {
                    Ok(r) => Some(r),
                    Err(Error::BudgetExceeded { .. }) => {
                        status = Status::BudgetExceeded;
                        None
                    }
                    Err(e) => return fail(format!("n = {n}: {e}")),
                }
            }
            None => None,
        };
        sizes.push(McSize {
            n,
            eps: ctx.eps,
            grid_points: ctx.points.len(),
            risk,
            set,
            tail,
        });
        if status == Status::BudgetExceeded {
            break;
        }
    }

    let violated = sizes.iter().any(|s| {
        s.risk.comparisons.iter().any(|c| !c.satisfied)
            || s.tail.as_ref().is_some_and(|t| !t.satisfied)
    });
    let bundle = McBundle {
        format: "resolv.mc-risk/1",
        version: VERSION,
        status,
        config: &cfg,
        sizes,
    };
    let written = match &out {
        Some(dir) => prepare_dir(dir)
            .and_then(|_| {
                write_csv(
                    std::fs::File::create(dir.join("mc_risk.csv"))?,
                    &bundle.sizes,
                )
            })
            .and_then(|_| write_json(&dir.join("mc_risk.json"), &bundle)),
        None => write_csv(std::io::stdout().lock(), &bundle.sizes),
    };
    if let Err(e) = written {
        return fail(e);
    }
    match status {
        Status::BudgetExceeded => {
            eprintln!("error: runtime budget exceeded; partial results written");
            EXIT_BUDGET
        }
        Status::Complete if violated => EXIT_VIOLATION,
        Status::Complete => EXIT_OK,
    }
}

fn write_csv<W: Write>(w: W, sizes: &[McSize]) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for s in sizes {
        for c in &s.risk.comparisons {
            wtr.serialize(CsvRow {
                n: s.n,
                eps: s.eps,
                reps: s.risk.reps,
                seed: s.risk.seed,
                mc_risk: s.risk.mc_risk,
                stderr: s.risk.stderr,
                certificate_id: &c.certificate_id,
                certificate_value: c.value,
                satisfied: c.satisfied,
                margin: c.margin,
            })?;
        }
    }
    wtr.flush()
}

pub fn verify_lemmas(args: &LemmaArgs) -> i32 {
    if let Some(bad) = args
        .checks
        .iter()
        .find(|c| !CHECK_IDS.contains(&c.as_str()))
    {
        return fail(format!(
            "unknown check id `{bad}` (known: {})",
            CHECK_IDS.join(", ")
        ));
    }
    let deadline = match deadline(args.budget_seconds) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let ids: Vec<&str> = CHECK_IDS
        .iter()
        .copied()
        .filter(|id| args.checks.is_empty() || args.checks.iter().any(|c| c == id))
        .collect();
    let mut ledger = LemmaCheckLedger {
        seed: args.seed,
        trials: args.trials as usize,
        total_failures: 0,
        checks: Vec::new(),
    };
    let mut status = Status::Complete;
    // One check at a time so the budget can stop the run between checks.
    for id in ids {
        if expired(deadline) {
            status = Status::BudgetExceeded;
            break;
        }
        let mut suite = LemmaSuiteConfig::new(args.seed, args.trials as usize);
        suite.only = Some(vec![id.to_string()]);
        match lemma_suite(&suite) {
            Ok(part) => {
                ledger.total_failures += part.total_failures;
                ledger.checks.extend(part.checks);
            }
            Err(e) => return fail(e),
        }
    }
    let failed = !ledger.passed();
    let bundle = LemmaBundle {
        format: "resolv.lemma-ledger/1",
        version: VERSION,
        status,
        ledger,
    };
    let written = match &args.out {
        Some(dir) => write_lemma_outputs(dir, &bundle),
        None => {
            let mut lock = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut lock, &bundle)
                .map_err(std::io::Error::from)
                .and_then(|_| lock.write_all(b"\n"))
        }
    };
    if let Err(e) = written {
        return fail(e);
    }
    for c in &bundle.ledger.checks {
        if c.failures > 0 {
            eprintln!(
                "{}: {} of {} trials violated (worst margin {:e})",
                c.check_id, c.failures, c.trials, c.worst_margin
            );
        }
    }
    match status {
        Status::BudgetExceeded => {
            eprintln!("error: runtime budget exceeded; partial ledger written");
            EXIT_BUDGET
        }
        Status::Complete if failed => EXIT_VIOLATION,
        Status::Complete => EXIT_OK,
    }
}

fn write_lemma_outputs(dir: &Path, bundle: &LemmaBundle) -> std::io::Result<()> {
    prepare_dir(dir)?;
    write_json(&dir.join("lemma_ledger.json"), bundle)?;
    let failing: Vec<_> = bundle
        .ledger
        .checks
        .iter()
        .filter(|c| !c.replays.is_empty())
        .collect();
    if !failing.is_empty() {
        let replay_dir = dir.join("replays");
        prepare_dir(&replay_dir)?;
        for c in failing {
            write_json(&replay_dir.join(format!("{}.json", c.check_id)), &c.replays)?;
        }
    }
    Ok(())
}
