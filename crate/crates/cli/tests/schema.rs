use std::path::{Path, PathBuf};
use std::process::Command;

use jsonschema::{Retrieve, Uri};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_resolv");

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(format!("{name}.schema.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Resolves `urn:resolv:schema:<name>` to the file next to it.
struct Local;

impl Retrieve for Local {
    fn retrieve(
        &self,
        uri: &Uri<String>,
    ) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri
            .as_str()
            .strip_prefix("urn:resolv:schema:")
            .ok_or_else(|| format!("unknown schema {}", uri.as_str()))?;
        Ok(load(name))
    }
}

fn assert_valid(schema: &str, instance: &Value) {
    let v = jsonschema::options()
        .with_retriever(Local)
        .build(&load(schema))
        .unwrap();
    let errors: Vec<String> = v
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

const CONFIG: &str = r#"{
  "family": {"kind": "gaussian", "dim": 1},
  "theta": [0.0],
  "grid": {"eps_rule": "sqrt(2/n)", "box": {"lo": [-2.0], "hi": [2.0]}},
  "penalty": {"kind": "squared-norm"},
  "n": [30, 120],
  "reps": 200,
  "decay": {"a": 0.5, "b": 1.0, "radius": 6.0},
  "tail": {"t": 0.2, "reps": 300}
}"#;

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env_remove("RESOLV_THREADS")
        .output()
        .unwrap()
}

#[test]
fn outputs_validate_against_published_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("out");
    let (cfg, out_s) = (cfg.to_str().unwrap(), out.to_str().unwrap());

    assert!(run(&["certify", "--config", cfg, "--out", out_s])
        .status
        .code()
        .is_some_and(|c| c <= 1));
    let certs: Value =
        serde_json::from_reader(std::fs::File::open(out.join("certificates.json")).unwrap())
            .unwrap();
    assert_valid("certificates", &certs);
    let first = &certs["sizes"][0];
    assert!(first["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["theorem_id"] == "squared-norm"));

    assert!(run(&["mc-risk", "--config", cfg, "--out", out_s])
        .status
        .code()
        .is_some_and(|c| c <= 1));
    let mc: Value =
        serde_json::from_reader(std::fs::File::open(out.join("mc_risk.json")).unwrap()).unwrap();
    assert_valid("mc-risk", &mc);
    for size in mc["sizes"].as_array().unwrap() {
        for c in size["certificates"].as_array().unwrap() {
            assert_valid("certificate", c);
        }
    }

    let lem = dir.path().join("lem");
    run(&[
        "verify-lemmas",
        "--trials",
        "300",
        "--out",
        lem.to_str().unwrap(),
    ]);
    let ledger: Value =
        serde_json::from_reader(std::fs::File::open(lem.join("lemma_ledger.json")).unwrap())
            .unwrap();
    assert_valid("lemma-ledger", &ledger);
}

#[test]
fn schemas_reject_a_wrong_format_tag() {
    let bad = serde_json::json!({"format": "other", "version": "0", "config": {"family": {}, "grid": {}}, "sizes": []});
    let v = jsonschema::options()
        .with_retriever(Local)
        .build(&load("certificates"))
        .unwrap();
    assert!(!v.is_valid(&bad));
}
