use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_bnhqc");

fn bnhqc(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(BIN)
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "bnhqc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn csv_bodies(doc: &Value) -> BTreeMap<String, String> {
    doc["csv_bodies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["file"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string()))
        .collect()
}

/// Commands whose CSV bodies are pinned by hash.
const GOLDEN: &[(&str, &[&str])] = &[
    ("synth", &["synth"]),
    ("evolve", &["evolve", "--record-every", "50"]),
    ("scan", &["scan", "--half-width", "4"]),
    ("decay", &["--seed", "7", "decay", "--n-max", "12", "--sigma", "0.002"]),
    ("qpt", &["--seed", "3", "--shots", "2000", "qpt", "--suite"]),
    ("qst", &["--shots", "5000", "qst", "--applications", "2"]),
    ("metrology", &["--shots", "2000", "metrology", "--calibrated", "--points", "9"]),
    ("reproduce-fig1b", &["reproduce", "fig1b"]),
    ("reproduce-fig2c", &["reproduce", "fig2c"]),
];

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/csv_sha256.json")
}

#[test]
fn csv_bodies_match_golden_hashes() {
    let mut actual = BTreeMap::new();
    for (name, args) in GOLDEN {
        let dir = TempDir::new().unwrap();
        bnhqc(dir.path(), args);
        let doc = report(dir.path(), name);
        for (file, hash) in csv_bodies(&doc) {
            let text = fs::read_to_string(dir.path().join(&file)).unwrap();
            let body = bnhqc_cli::report::csv_body(&text);
            assert_eq!(bnhqc_cli::report::sha256_hex(body.as_bytes()), hash, "{name}/{file}");
            actual.insert(format!("{name}/{file}"), hash);
        }
    }
    let path = golden_path();
    if std::env::var_os("BNHQC_UPDATE_GOLDEN").is_some() {
        fs::write(&path, serde_json::to_string_pretty(&actual).unwrap() + "\n").unwrap();
        return;
    }
    let expected: BTreeMap<String, String> =
        serde_json::from_str(&fs::read_to_string(&path).expect("golden file; set BNHQC_UPDATE_GOLDEN=1 to create")).unwrap();
    assert_eq!(actual, expected);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["--seed", "11", "--shots", "500", "metrology", "--points", "7", "--calibrated"];
    bnhqc(a.path(), &args);
    bnhqc(b.path(), &args);
    for file in ["metrology.json", "metrology_fringe.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let c = TempDir::new().unwrap();
    bnhqc(c.path(), &["--seed", "12", "--shots", "500", "metrology", "--points", "7", "--calibrated"]);
    assert_ne!(
        fs::read(a.path().join("metrology_fringe.csv")).unwrap(),
        fs::read(c.path().join("metrology_fringe.csv")).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = a.path().join("noisy.json");
    fs::write(&cfg, r#"{"noise": {"detuning_sigma_mhz": 2.0}, "mc_shots": 200, "seed": 5}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    bnhqc(a.path(), &["--config", cfg, "--threads", "1", "evolve"]);
    bnhqc(b.path(), &["--config", cfg, "--threads", "4", "evolve"]);
    assert_eq!(
        fs::read(a.path().join("evolve.json")).unwrap(),
        fs::read(b.path().join("evolve.json")).unwrap()
    );
    assert!(report(a.path(), "evolve")["results"]["monte_carlo"].is_object());
}

#[test]
fn bad_config_reports_json_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"rabi_mhz": 12.5, "rabbi_mhz": 3}"#).unwrap();
    let out = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "synth"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    assert_eq!(err["module"], "config");
    assert_eq!(err["kind"], "schema");
    assert!(err["message"].as_str().unwrap().contains("rabbi_mhz"));

    let out = Command::new(BIN).args(["--gate", "Q", "synth"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["module"], "config");
}

#[test]
fn json_only_suppresses_csv() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["--format", "json-only", "synth"]);
    let files: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, vec!["synth.json"]);
    assert_eq!(csv_bodies(&report(dir.path(), "synth")).len(), 1);
}

#[test]
fn csv_files_carry_seed_and_config() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["--seed", "42", "synth"]);
    let text = fs::read_to_string(dir.path().join("synth_samples.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# bnhqc "));
    assert_eq!(lines.next().unwrap(), "# seed: 42");
    let cfg: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(cfg["seed"], 42);
    assert_eq!(cfg["rabi_mhz"], 12.5);
}

#[test]
fn synth_duration_is_tau_min() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["--gate", "(gamma=1.3,theta=0.4,phi=0.2)", "synth"]);
    let r = &report(dir.path(), "synth")["results"];
    assert!((f(&r["duration_us"]) - f(&r["tau_min_us"])).abs() < 1e-9);
    let omega = 2.0 * PI * 12.5;
    let expect = 2.0 * (PI * PI - (PI - 1.3f64).powi(2)).sqrt() / omega;
    assert!((f(&r["tau_min_us"]) - expect).abs() < 1e-9);
}

#[test]
fn evolve_reaches_target() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["--gate", "Y/2", "evolve"]);
    let r = &report(dir.path(), "evolve")["results"];
    assert!(1.0 - f(&r["gate_fidelity"]) < 1e-9);
    assert!(f(&r["leakage"]) < 1e-9);
    // The two-level Λ reduction has nowhere to leak to.
    bnhqc(dir.path(), &["--gate", "Y/2", "evolve", "--space", "lambda"]);
    let r = &report(dir.path(), "evolve")["results"];
    assert!(1.0 - f(&r["gate_fidelity"]) < 1e-9);
    assert!(r["leakage"].is_null());
}

#[test]
fn scan_minimum_sits_at_tau_min() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["scan", "--gamma", "2.0", "--half-width", "6"]);
    let r = &report(dir.path(), "scan")["results"];
    assert!((f(&r["tau_star_us"]) - f(&r["tau_min_us"])).abs() <= 0.5e-3 + 1e-12);
}

#[test]
fn qpt_noiseless_is_exact() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["qpt", "--suite", "--noiseless"]);
    let r = &report(dir.path(), "qpt")["results"];
    assert!((f(&r["average_fidelity"]) - 1.0).abs() < 1e-9);
    assert_eq!(r["gates"].as_array().unwrap().len(), 6);
}

#[test]
fn qst_of_cy_is_entangled_target() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["qst"]);
    let r = &report(dir.path(), "qst")["results"];
    // Only the weak-drive crosstalk of the hybrid C-Y remains without noise.
    assert!(f(&r["simulated_fidelity"]) > 0.999);
    // Exact expectations: tomography reconstructs the state it was given.
    assert!((f(&r["state_fidelity"]) - f(&r["simulated_fidelity"])).abs() < 1e-3);
}

#[test]
fn decay_fit_recovers_injected_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"gate": "X", "noise": {"depol_per_gate": 0.0078}}"#).unwrap();
    bnhqc(dir.path(), &["--config", cfg.to_str().unwrap(), "decay"]);
    let r = &report(dir.path(), "decay")["results"];
    assert!((f(&r["fit"]["p"]) - 0.0078).abs() < 1e-4);
}

#[test]
fn metrology_noon_doubles_frequency() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["--shots", "20000", "metrology", "--probe", "noon", "--backend", "ideal"]);
    let r = &report(dir.path(), "metrology")["results"];
    assert!((f(&r["fit"]["k"]) - 2.0).abs() < 1e-12, "{}", r["fit"]);
}

#[test]
fn reproduce_fig1b_follows_closed_form() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["reproduce", "fig1b"]);
    let text = fs::read_to_string(dir.path().join("fig1b.csv")).unwrap();
    let omega = 2.0 * PI * 12.5;
    let body = bnhqc_cli::report::csv_body(&text);
    let mut rows = 0;
    for line in body.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let expect = 2.0 * (PI * PI - (PI - v[0]).powi(2)).max(0.0).sqrt() / omega;
        assert!((v[2] - expect).abs() < 1e-9, "{line}");
        assert!((v[3] - expect).abs() < 1e-9, "{line}");
        assert!(v[2] <= v[1] + 1e-12);
        rows += 1;
    }
    assert!(rows > 10);
}

#[test]
fn reproduce_table_kappa() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["reproduce", "table-s1-kappa"]);
    let r = &report(dir.path(), "reproduce-table-s1-kappa")["results"];
    assert!((f(&r["kappa"]) - 2.84).abs() < 0.01);
    assert_eq!(f(&r["reported_kappa"]), 2.9);
    assert_eq!(r["manifest"]["target"], "table-s1-kappa");
}

#[test]
fn reproduce_list_prints_manifest() {
    let out = Command::new(BIN).args(["reproduce", "--list"]).output().unwrap();
    assert!(out.status.success());
    let m: Value = serde_json::from_slice(&out.stdout).unwrap();
    let targets: Vec<_> = m.as_array().unwrap().iter().map(|e| e["target"].as_str().unwrap()).collect();
    assert_eq!(targets, ["fig1b", "fig1d", "fig2a", "fig2c", "fig3", "fig-s3", "table-s1-kappa"]);
}

#[test]
fn schema_defaults_match_code() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    fn defaults(props: &Value) -> Value {
        let mut out = serde_json::Map::new();
        for (k, v) in props.as_object().unwrap() {
            let d = match v.get("properties") {
                Some(p) => defaults(p),
                None => v["default"].clone(),
            };
            out.insert(k.clone(), d);
        }
        Value::Object(out)
    }
    let from_schema = defaults(&schema["properties"]);
    let from_code = serde_json::to_value(bnhqc_cli::config::RunConfig::default()).unwrap();
    assert_eq!(from_schema, from_code);
}

#[test]
fn reproduce_fig1d_saves_time_on_t() {
    let dir = TempDir::new().unwrap();
    bnhqc(dir.path(), &["reproduce", "fig1d"]);
    let r = &report(dir.path(), "reproduce-fig1d")["results"];
    for label in ["bnhqc", "nhqc"] {
        assert!(1.0 - f(&r[format!("gate_fidelity_{label}")]) < 1e-9);
    }
    assert!(f(&r["duration_bnhqc_us"]) < f(&r["duration_nhqc_us"]));
    assert!(f(&r["saved_ns"]) > 0.0);
}
