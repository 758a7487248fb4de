use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hankel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hankel")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn max_error(v: &Value) -> f64 {
    ["relative_errors", "second_relative_errors"]
        .iter()
        .flat_map(|k| v[k].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()))
        .fold(0.0, f64::max)
}

#[test]
fn gen_then_fit2d_recovers_two_peak_poles() {
    let dir = tempfile::tempdir().unwrap();
    let (sig, truth) = (path(dir.path(), "s.csv"), path(dir.path(), "t.json"));
    let out = hankel(&["gen", "--dims", "16,13", "--out", &sig, "--truth", &truth]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = hankel(&["fit2d", &sig, "--rank", "2", "--order", "3", "--block-dims", "6,6,6", "--dims", "30,30,30", "--truth", &truth]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["poles"].as_array().unwrap().len(), 2);
    assert!(max_error(&v) <= 1e-6);
}

#[test]
fn gen_then_fit1d_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let (model, sig, truth) = (path(dir.path(), "m.json"), path(dir.path(), "s.csv"), path(dir.path(), "t.json"));
    fs::write(&model, r#"{"terms": [{"c": [1, 0], "z": [0.9, 0]}, {"c": [0.5, 0.5], "z": [0.2, 0.9]}]}"#).unwrap();
    let out = hankel(&["gen", "--model", &model, "--dims", "13", "--out", &sig, "--truth", &truth]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = hankel(&["fit1d", &sig, "--rank", "2", "--truth", &truth]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let errs = v["relative_errors"].as_array().unwrap();
    assert!(errs.iter().all(|e| e.as_f64().unwrap() < 1e-8));
}

#[test]
fn zero_signal_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let sig = path(dir.path(), "zero.csv");
    let rows: String = (0..13).map(|n| format!("{n},0,0\n")).collect();
    fs::write(&sig, format!("n,re,im\n{rows}")).unwrap();
    assert_eq!(hankel(&["fit1d", &sig, "--rank", "1"]).status.code(), Some(3));
}

#[test]
fn parse_errors_report_line_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sig = path(dir.path(), "bad.csv");
    fs::write(&sig, "n,re,im\n0,1,0\n1,0.5,oops\n").unwrap();
    let out = hankel(&["fit1d", &sig, "--rank", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    fs::write(&sig, "t,value\n0,1\n").unwrap();
    let out = hankel(&["fit1d", &sig, "--rank", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    assert_eq!(hankel(&["fit1d", &path(dir.path(), "missing.csv"), "--rank", "1"]).status.code(), Some(2));
    assert_eq!(hankel(&["bench", "--reps", "0"]).status.code(), Some(2));
    assert_eq!(hankel(&["fit1d", "--bogus"]).status.code(), Some(2));
}

#[test]
fn svals_noiseless_has_two_significant_values() {
    let out = hankel(&["svals", "--format", "json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let s: Vec<f64> = v[0]["singular_values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(s[1] / s[0] > 1e-10);
    assert!(s[2] <= 1e-10 * s[0]);
}

#[test]
fn bench_reports_both_algorithms() {
    let out = hankel(&["bench", "--order", "3", "--dims", "16", "--reps", "3", "--products", "5", "--format", "json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["seconds_per_product"].as_f64().unwrap() > 0.0));
    assert!(rows[1]["agreement"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sig = path(dir.path(), "s.csv");
    let a = hankel(&["gen", "--noise", "1e-3", "--seed", "11"]);
    let b = hankel(&["gen", "--noise", "1e-3", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    fs::write(&sig, &a.stdout).unwrap();
    let fit = |_: ()| hankel(&["fit2d", &sig, "--rank", "2", "--noise", "1e-3", "--reps", "3", "--format", "csv"]).stdout;
    assert_eq!(fit(()), fit(()));
    let sv = |_: ()| hankel(&["svals", "--noise", "0,1e-2", "--reps", "2"]).stdout;
    assert_eq!(sv(()), sv(()));
}
