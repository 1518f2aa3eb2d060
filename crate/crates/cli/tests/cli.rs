use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_resolv");

const GAUSSIAN: &str = r#"{
  "family": {"kind": "gaussian", "dim": 1},
  "theta": [0.3],
  "grid": {"eps_rule": "sqrt(2/n)", "box": {"lo": [-3.0], "hi": [3.0]}},
  "n": [25, 100],
  "reps": 400,
  "seed": 11,
  "tail": {"t": 0.1}
}"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn resolv(args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("RESOLV_THREADS", t),
        None => cmd.env_remove("RESOLV_THREADS"),
    };
    cmd.output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_reader(std::fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn mc_risk_csv_is_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", GAUSSIAN);
    let cfg = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for (k, threads) in [None, Some("1"), Some("3")].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let o = resolv(
            &["mc-risk", "--config", cfg, "--out", out.to_str().unwrap()],
            threads,
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        outputs.push((
            std::fs::read(out.join("mc_risk.csv")).unwrap(),
            std::fs::read(out.join("mc_risk.json")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with(
        "n,eps,reps,seed,mc_risk,stderr,certificate_id,certificate_value,satisfied,margin\n"
    ));
    let report = json(&dir.path().join("run0/mc_risk.json"));
    assert_eq!(report["status"], "complete");
    assert_eq!(report["config"]["seed"], 11);
    assert!(report["version"].is_string());
    assert!(report["sizes"][0]["tail"]["satisfied"].as_bool().unwrap());
}

#[test]
fn seed_flag_changes_the_streams() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", GAUSSIAN);
    let a = resolv(&["mc-risk", "--config", cfg.to_str().unwrap()], None);
    let b = resolv(
        &["mc-risk", "--config", cfg.to_str().unwrap(), "--seed", "12"],
        None,
    );
    assert_eq!(a.status.code(), Some(0));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn certify_lists_inapplicable_theorems_with_reasons() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", GAUSSIAN);
    let out = dir.path().join("out");
    let o = resolv(
        &[
            "certify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let b = json(&out.join("certificates.json"));
    let size = &b["sizes"][1];
    assert_eq!(size["n"], 100);
    let ids: Vec<&str> = size["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["theorem_id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"gaussian-decay-concrete"));
    assert!(ids.contains(&"minimax"));
    let skipped = size["inapplicable"].as_array().unwrap();
    let squared = skipped
        .iter()
        .find(|s| s["theorem_id"] == "squared-norm")
        .unwrap();
    assert!(squared["reason"]
        .as_str()
        .unwrap()
        .contains("squared-norm penalty"));
    // Each certificate carries its components and the assumptions it rests on.
    for c in size["certificates"].as_array().unwrap() {
        assert!(c["components"].as_object().is_some_and(|m| !m.is_empty()));
        assert!(c["assumptions"].as_array().is_some_and(|a| !a.is_empty()));
    }
}

#[test]
fn certify_accepts_an_external_sample() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.csv", "0.1\n-0.4\n0.35\n0.2\n");
    let cfg = format!(
        r#"{{
          "family": {{"kind": "gaussian", "dim": 1}},
          "sample_path": {:?},
          "grid": {{"eps_rule": "sqrt(2/n)", "box": {{"lo": [-2.0], "hi": [2.0]}}}}
        }}"#,
        data.to_str().unwrap()
    );
    let cfg = write(dir.path(), "cfg.json", &cfg);
    let o = resolv(&["certify", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let b: Value = serde_json::from_slice(&o.stdout).unwrap();
    let size = &b["sizes"][0];
    assert_eq!(size["n"], 4);
    // Mean 0.0625 rounds to the grid point 0 at spacing sqrt(1/2).
    assert_eq!(size["estimate"]["theta"][0], 0.0);
    assert!(size["resolvability"].is_null());

    let mc = resolv(&["mc-risk", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(mc.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let typo = GAUSSIAN.replace("\"seed\"", "\"sed\"");
    let cfg = write(dir.path(), "typo.json", &typo);
    let o = resolv(&["certify", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 7") && err.contains("sed"), "{err}");

    let both = GAUSSIAN.replace(
        "\"eps_rule\": \"sqrt(2/n)\"",
        "\"eps_rule\": \"sqrt(2/n)\", \"eps\": 0.1",
    );
    let cfg = write(dir.path(), "both.json", &both);
    let o = resolv(&["certify", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mutually exclusive"));

    let empty = GAUSSIAN.replace("\"seed\": 11", "\"seed\": 11, \"certificates\": []");
    let cfg = write(dir.path(), "empty.json", &empty);
    assert_eq!(
        resolv(&["certify", "--config", cfg.to_str().unwrap()], None)
            .status
            .code(),
        Some(2)
    );

    let missing = dir.path().join("nope.json");
    assert_eq!(
        resolv(&["certify", "--config", missing.to_str().unwrap()], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn zero_trials_is_a_usage_error() {
    assert_eq!(
        resolv(&["verify-lemmas", "--trials", "0"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        resolv(&["verify-lemmas", "--check", "no-such-check"], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn exhausted_budget_exits_3_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", GAUSSIAN);
    let out = dir.path().join("out");
    let o = resolv(
        &[
            "mc-risk",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--budget-seconds",
            "0",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3));
    let b = json(&out.join("mc_risk.json"));
    assert_eq!(b["status"], "budget-exceeded");
    assert!(out.join("mc_risk.csv").exists());

    let lem = dir.path().join("lem");
    let o = resolv(
        &[
            "verify-lemmas",
            "--out",
            lem.to_str().unwrap(),
            "--budget-seconds",
            "0",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        json(&lem.join("lemma_ledger.json"))["status"],
        "budget-exceeded"
    );
}

#[test]
fn verify_lemmas_subset_passes_and_is_reproducible() {
    let args = [
        "verify-lemmas",
        "--trials",
        "200",
        "--seed",
        "5",
        "--check",
        "log-sum",
        "--check",
        "affinity-median",
    ];
    let a = resolv(&args, None);
    let b = resolv(&args, Some("2"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
    assert_eq!(v["total_failures"], 0);
}

#[test]
fn failing_check_writes_replays_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lem");
    let o = resolv(
        &[
            "verify-lemmas",
            "--trials",
            "1000",
            "--check",
            "grid-power-decay-middle",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    let replays = json(&out.join("replays/grid-power-decay-middle.json"));
    assert!(!replays.as_array().unwrap().is_empty());
}
