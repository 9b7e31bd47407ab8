use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heisenberg-polymer"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn two_site_evolution_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evolve", "--dims", "2", "--init", "single:0", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("evolve.json"));
    let coeffs = &v["snapshots"][0]["state"]["coeffs"];
    let expected = 0.5 * (1.0 + (-2.0f64 * 0.5).exp());
    assert!((coeffs[1].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!((coeffs[1].as_f64().unwrap() - 0.6839397).abs() < 1e-7);
    assert!((coeffs[2].as_f64().unwrap() - (1.0 - expected)).abs() < 1e-12);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["manifest_hash"], v["manifest_hash"]);
    let summary = fs::read_to_string(dir.path().join("evolve_summary.csv")).unwrap();
    assert!(summary.starts_with(&format!("# manifest_hash={}", v["manifest_hash"].as_str().unwrap())));
}

#[test]
fn single_vertex_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evolve", "--dims", "1", "--init", "single:0", "--t", "0,1,3", "--method", "rk4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("evolve.json"));
    for snap in v["snapshots"].as_array().unwrap() {
        assert_eq!(snap["state"]["coeffs"], serde_json::json!([0.0, 1.0]));
    }
}

#[test]
fn csv_output_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evolve", "--dims", "3x2", "--init", "random", "--seed", "7", "--t", "0.5,1", "--format", "csv"];
    assert_eq!(run(a.path(), &args).status.code(), Some(0));
    assert_eq!(run(b.path(), &args).status.code(), Some(0));
    for name in ["evolve_series.csv", "evolve_summary.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let series = fs::read_to_string(a.path().join("evolve_series.csv")).unwrap();
    assert_eq!(series.lines().nth(1), Some("t,mask,cardinality,coefficient"));
    assert_eq!(series.lines().count(), 2 + 2 * 64);
}

#[test]
fn rk4_drift_is_reported_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evolve", "--dims", "4x3", "--init", "random", "--seed", "7", "--t", "1", "--method", "rk4"]);
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["max_total_sum_drift"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn zero_sum_state_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    fs::write(&state, r#"{"n_vertices":2,"coeffs":[0.5,-0.5,0.25,-0.25]}"#).unwrap();
    let out = run(dir.path(), &["decompose", "--dims", "2", "--state", state.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn size_caps_and_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["evolve", "--dims", "13", "--t", "1"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["decompose", "--dims", "7x3"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["evolve", "--dims", "2", "--init", "single:5"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["evolve", "--dims", "2", "--t", "-1"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["evolve", "--dims", "0"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["truncate", "--dims", "2", "--kmax", "3"]).status.code(), Some(2));
}

#[test]
fn decompose_reports_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["decompose", "--dims", "3x2", "--init", "single:0", "--t", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("decompose.json"));
    assert!(v["roundtrip_relative_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["roundtrip_pass"], Value::Bool(true));
    let polymers = fs::read_to_string(dir.path().join("polymers.csv")).unwrap();
    assert_eq!(polymers.lines().nth(1), Some("mask,cardinality,value"));
    assert_eq!(polymers.lines().count(), 2 + 63);
}

#[test]
fn verify_passes_on_small_lattices() {
    for dims in ["2x2", "1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(dir.path(), &["verify", "--dims", dims, "--trials", "3"]);
        assert_eq!(out.status.code(), Some(0), "{dims}: {}", String::from_utf8_lossy(&out.stdout));
        let v = read_json(&dir.path().join("verify_report.json"));
        assert_eq!(v["all_pass"], Value::Bool(true));
    }
}

#[test]
fn truncate_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["truncate", "--dims", "6", "--init", "single:0", "--t", "0.2,1,5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("truncation.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("t,k_max,l1_error,linf_error,rel_l2_error"));
    assert_eq!(csv.lines().count(), 2 + 3 * 6);
    let v = read_json(&dir.path().join("truncation.json"));
    for table in v["tables"].as_array().unwrap() {
        let last = table["rows"].as_array().unwrap().last().unwrap();
        assert_eq!(last["k_max"], 6);
        assert_eq!(last["l1_error"].as_f64().unwrap(), 0.0);
    }
    let long = fs::read_to_string(dir.path().join("truncation_long.csv")).unwrap();
    assert_eq!(long.lines().count(), 2 + 3 * 6 * 3);
}
