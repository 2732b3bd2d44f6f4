use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kdcoll::cli::{parse_config, Preset};

fn kdcoll(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdcoll"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn preset_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = kdcoll(&["preset", "fig3b", "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 512);
    assert!(text.starts_with("lambda_frac,tau,collision,flag,delta_e_s,"));
}

#[test]
fn parse_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "preset = custom\n[model]\ng = 1\ntau = pi/*2\n");
    let o = kdcoll(&["validate", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "[model]\ngamma = 1\n");
    let o = kdcoll(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("line 2") && msg.contains("gamma"), "{msg}");
}

#[test]
fn coherence_bound_names_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "[model]\nbeta = 1\nlambda = 0.5\n");
    let o = kdcoll(&["validate", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("1/Z_A") && msg.contains("0.5") && msg.contains("0.443"), "{msg}");
}

#[test]
fn negative_tau_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "[model]\ntau = -0.1\n");
    let o = kdcoll(&["validate", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tau"), "{}", stderr(&o));
}

#[test]
fn minimal_fig5_config_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "f5.cfg", "preset = fig5\nout = f5.csv\n");
    let o = kdcoll(&["run", &cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("f5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 513);
    let meta = fs::read_to_string(dir.path().join("f5.csv.meta")).unwrap();
    let mut spec = parse_config(&meta).unwrap();
    spec.out = None;
    assert_eq!(spec, Preset::Fig5.spec());
    assert!(meta.contains("beta = 0.1\n") && meta.contains("phi_c = 1.0471975511965976\n"));
}

#[test]
fn custom_without_sweep_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "[model]\ndelta = 2\nlambda_frac = 0.3\n[output]\nquantities = delta_e, delta_e_analytic\n");
    let o = kdcoll(&["run", &cfg, "--out", "c.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    let col = |n: &str| row[header.iter().position(|h| *h == n).unwrap()];
    assert!((col("delta_e_s") - col("delta_e_s_analytic")).abs() < 1e-12);
    assert!((col("delta_e_sa") - col("delta_e_sa_analytic")).abs() < 1e-12);
}

#[test]
fn metadata_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdcoll(&["preset", "fig6", "--out", "first.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = dir.path().join("first.csv.meta").to_string_lossy().into_owned();
    let o = kdcoll(&["run", &meta, "--out", "second.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(dir.path().join("first.csv")).unwrap(),
        fs::read(dir.path().join("second.csv")).unwrap()
    );
}

#[test]
fn unknown_preset_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdcoll(&["preset", "fig9"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fig1"));
}

#[test]
fn show_prints_parseable_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdcoll(&["preset", "fig1", "--show"], dir.path());
    assert!(o.status.success());
    let spec = parse_config(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(spec, Preset::Fig1.spec());
}

#[test]
fn selftest_exit_code_reflects_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdcoll(&["selftest"], dir.path());
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).count(), 13);
    let failing = out.lines().filter(|l| l.starts_with("[FAIL]")).count();
    let expected = if failing == 0 { 0 } else { 2 };
    assert_eq!(o.status.code(), Some(expected));
}
