use std::process::{Command, Output};

use serde_json::Value;

fn subwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = subwalk(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

const SMALL: [&str; 4] = ["--k-exact", "128", "--radius", "48"];

#[test]
fn coefficient_tables() {
    let v = json(&["coeffs", "--alpha", "1", "--n", "4"]);
    let c: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["c"].as_f64().unwrap()).collect();
    assert_eq!(c, vec![0.5, 0.125, 0.0625, 0.0390625]);
    let out = subwalk(&["coeffs", "--alpha", "2", "--n", "3", "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let rows: Vec<(usize, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows, vec![(1, 1.0), (2, 0.0), (3, 0.0)]);
}

#[test]
fn exit_codes() {
    assert_eq!(subwalk(&["coeffs", "--alpha", "2.5"]).status.code(), Some(2));
    assert_eq!(subwalk(&["green", "--dim", "1", "--alpha", "1", "--x", "0"]).status.code(), Some(2));
    assert_eq!(subwalk(&["coeffs", "--alpha", "1", "--bogus"]).status.code(), Some(2));
    let mut args = vec!["green", "--dim", "3", "--alpha", "1", "--x", "30,0,0", "--tol", "1e-12"];
    args.extend(SMALL);
    assert_eq!(subwalk(&args).status.code(), Some(3));
    for sub in ["coeffs", "green", "capacity", "wiener", "thorn", "hyperplane", "simulate"] {
        assert!(subwalk(&[sub, "--help"]).status.success(), "{sub}");
    }
}

#[test]
fn green_values() {
    let mut args = vec!["green", "--dim", "3", "--alpha", "2", "--x", "0,0,0"];
    args.extend(SMALL);
    let v = json(&args);
    assert!((v["value"].as_f64().unwrap() - 1.516386).abs() < 1e-3);
    let mut args = vec!["green", "--dim", "3", "--alpha", "1", "--x", "60,0,0"];
    args.extend(SMALL);
    let v = json(&args);
    assert!((v["ratio_to_asymptotic"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert!((v["riesz_ratio_stated"].as_f64().unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn capacity_report_fields() {
    let mut args = vec!["capacity", "--dim", "3", "--alpha", "2", "--set", "point"];
    args.extend(SMALL);
    let v = json(&args);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 6);
    for k in ["method", "capacity", "residual", "n_points", "d", "alpha"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert!((v["capacity"].as_f64().unwrap() - 0.65946).abs() < 1e-3);
}

#[test]
fn thorn_verdicts() {
    let v = json(&["thorn", "--profile", "linoverlog", "--beta", "1", "--dim", "3", "--alpha", "1"]);
    assert_eq!(v["verdict"], "massive");
    let v = json(&["thorn", "--profile", "linoverlog", "--beta", "2", "--dim", "3", "--alpha", "1"]);
    assert_eq!(v["verdict"], "non-massive");
    let v = json(&["thorn", "--profile", "linear", "--delta", "1", "--alpha", "1.5"]);
    assert_eq!(v["route"], "inscribed-ball");
    assert_eq!(subwalk(&["thorn", "--profile", "power", "--alpha", "1"]).status.code(), Some(2));
}

#[test]
fn hyperplane_classes() {
    let v = json(&["hyperplane", "--alpha", "0.5"]);
    assert_eq!(v["classification"], "non-massive");
    let v = json(&["hyperplane", "--alpha", "1.5"]);
    assert_eq!(v["classification"], "massive");
}

#[test]
fn simulation_is_deterministic() {
    let args = ["simulate", "--set", "axis", "--alpha", "1", "--start", "0,10,0", "--trials", "1000", "--seed", "7"];
    let a = subwalk(&args);
    let b = subwalk(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys.len(), 9);
    for k in ["set", "start", "trials", "hits", "estimate", "ci_low", "ci_high", "stopping", "seed"] {
        assert!(keys.contains(&k), "{k}");
    }
    let v = json(&["simulate", "--set", "axis", "--alpha", "1", "--start", "10,0,0", "--trials", "1000", "--seed", "7"]);
    assert_eq!(v["estimate"], 1.0);
}

#[test]
fn out_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wiener.csv");
    let p = path.to_str().unwrap();
    let mut args = vec!["wiener", "--alpha", "1", "--set", "axis", "--kmax", "4", "--format", "csv", "--out", p];
    args.extend(SMALL);
    let out = subwalk(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("k,n_points,n_used,capacity,chi,term,partial_sum,lower_bound"));
    assert_eq!(text.lines().count(), 6);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(format!("{p}.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "wiener");
    assert_eq!(m["outputs"][0], p);
    assert!(m["tool_version"].is_string());
}
