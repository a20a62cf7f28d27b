use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_projband"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Data rows of a CSV output, after the metadata and header lines.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const TEN: &str = "0.1\n-0.5\n0.3\n0.9\n-0.2\n0.05\n0.6\n-0.8\n0.4\n0.0\n";

#[test]
fn estimate_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let sample = write(tmp.path(), "s.txt", TEN);
    let out = tmp.path().join("o");
    let o = run(&["estimate", "--input", s(&sample), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(out.join("estimate.csv"));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# tool=projband version="));
    assert_eq!(lines.next().unwrap(), "x,p_hat");
    assert_eq!(rows(&csv).len(), 601);
    let json: serde_json::Value = serde_json::from_str(&read(out.join("estimate.json"))).unwrap();
    assert_eq!(json["result"]["n"], 10);
    assert_eq!(json["result"]["M"], 4);
    assert_eq!(json["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn single_constant_cell_is_flat() {
    let tmp = TempDir::new().unwrap();
    let sample = write(tmp.path(), "s.txt", TEN);
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"schema_version": 1, "degree": 0, "cells": 1, "interval": [-1, 1], "grid_points": 21}"#,
    );
    let out = tmp.path().join("o");
    let o = run(&["estimate", "--config", s(&cfg), "--input", s(&sample), "--out", s(&out)]);
    assert!(o.status.success());
    for r in rows(&read(out.join("estimate.csv"))) {
        assert!((r[1] - 0.5).abs() < 1e-15);
    }
}

#[test]
fn outputs_are_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"schema_version": 1, "n_rep": 3000, "grid": 501}"#);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run(&["mc-sup", "--config", s(&cfg), "--seed", "5", "--out", s(&a)]).status.success());
    assert!(run(&["mc-sup", "--config", s(&cfg), "--seed", "5", "--out", s(&b), "--threads", "1"])
        .status
        .success());
    assert!(run(&["mc-sup", "--config", s(&cfg), "--seed", "6", "--out", s(&c)]).status.success());
    for f in ["mc_sup.csv", "mc_sup.json"] {
        assert_eq!(read(a.join(f)), read(b.join(f)));
        assert_ne!(read(a.join(f)), read(c.join(f)));
    }
    assert!(read(a.join("mc_sup.csv")).lines().next().unwrap().ends_with("seed=5"));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["rice", "--seed", "minus-one"]).status.code(), Some(2));

    let bad_sample = write(tmp.path(), "bad.txt", "0.1\nabc\n");
    let o = run(&["estimate", "--input", s(&bad_sample), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let missing = tmp.path().join("nope.txt");
    assert_eq!(run(&["estimate", "--input", s(&missing), "--out", s(&out)]).status.code(), Some(2));

    let bad_field = write(tmp.path(), "f.json", r#"{"schema_version": 1, "degre": 4}"#);
    let o = run(&["chi-opt", "--config", s(&bad_field), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degre"));

    let no_schema = write(tmp.path(), "n.json", r#"{"degree": 4}"#);
    assert_eq!(run(&["chi-opt", "--config", s(&no_schema), "--out", s(&out)]).status.code(), Some(2));

    let flat = write(tmp.path(), "d.json", r#"{"schema_version": 1, "degree": 0}"#);
    let o = run(&["chi-opt", "--config", s(&flat), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));

    let sample = write(tmp.path(), "s.txt", TEN);
    let alpha = write(tmp.path(), "a.json", r#"{"schema_version": 1, "alpha": 1.5, "interval": [-1, 1]}"#);
    let o = run(&["band", "--config", s(&alpha), "--input", s(&sample), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));

    let outside = write(tmp.path(), "far.txt", "10\n11\n");
    assert_eq!(run(&["estimate", "--input", s(&outside), "--out", s(&out)]).status.code(), Some(3));
}

#[test]
fn band_narrows_as_alpha_grows() {
    let tmp = TempDir::new().unwrap();
    let values: String = (0..400).map(|i| format!("{}\n", -0.99 + 1.98 * (i as f64 * 0.618).fract())).collect();
    let sample = write(tmp.path(), "s.txt", &values);
    let width = |alpha: f64| {
        let cfg = write(
            tmp.path(),
            "c.json",
            &format!(r#"{{"schema_version": 1, "interval": [-1, 1], "degree": 2, "alpha": {alpha}}}"#),
        );
        let out = tmp.path().join(format!("o{alpha}"));
        assert!(run(&["band", "--config", s(&cfg), "--input", s(&sample), "--out", s(&out)]).status.success());
        let csv = read(out.join("band.csv"));
        assert_eq!(csv.lines().nth(1).unwrap(), "x,lower,p_hat,upper,negative,empty");
        let rs = rows(&csv);
        for r in &rs {
            assert!(r[1] <= r[3]);
            if r[2] >= 0.0 {
                assert!(r[1] <= r[2] + 1e-12 && r[2] <= r[3] + 1e-12);
            }
        }
        rs.iter().map(|r| r[3] - r[1]).sum::<f64>()
    };
    assert!(width(0.5) < width(0.01));
}

#[test]
fn chi_opt_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o4");
    assert!(run(&["chi-opt", "--out", s(&out)]).status.success());
    let json: serde_json::Value = serde_json::from_str(&read(out.join("chi.json"))).unwrap();
    assert!((json["result"]["chi_opt"].as_f64().unwrap() - 2.0 / 3.0).abs() < 0.01);
    let rs = rows(&read(out.join("chi.csv")));
    assert_eq!(rs.len(), 400);
    assert!(rs[0][4] <= 0.01 + 1e-12);

    let cfg = write(tmp.path(), "c.json", r#"{"schema_version": 1, "degree": 5, "delta_range": [0.01, 1.0], "grid": 40}"#);
    let out = tmp.path().join("o5");
    assert!(run(&["chi-opt", "--config", s(&cfg), "--out", s(&out)]).status.success());
    for r in rows(&read(out.join("chi.csv"))) {
        assert!((r[3] - 1.4).abs() < 1e-9);
    }
}

#[test]
fn rice_with_and_without_monte_carlo() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"schema_version": 1, "levels": [0.5, 1.0], "n_rep": 4000, "grid": 1001}"#);
    let out = tmp.path().join("o");
    assert!(run(&["rice", "--config", s(&cfg), "--out", s(&out)]).status.success());
    for r in rows(&read(out.join("rice.csv"))) {
        assert!((r[2] - r[3]).abs() < 4.0 * r[4] + 1e-3 * r[2], "{r:?}");
    }
    let cfg = write(tmp.path(), "c.json", r#"{"schema_version": 1, "n_rep": 0}"#);
    assert!(run(&["rice", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let csv = read(out.join("rice.csv"));
    assert!(csv.lines().nth(2).unwrap().ends_with(",,"));
}

#[test]
fn experiment_distribution_and_coverage() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "d.json",
        r#"{"schema_version": 1, "distribution": {"n_values": [300, 600], "runs": 10}, "panel_points": 51}"#,
    );
    let out = tmp.path().join("d");
    let o = run(&["experiment", "--config", s(&cfg), "--seed", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(out.join("experiment.json"))).unwrap();
    assert_eq!(json["result"]["config"]["seed"], 2);
    assert_eq!(json["result"]["sizes"].as_array().unwrap().len(), 2);
    assert_eq!(rows(&read(out.join("cdf_n300.csv"))).len(), 10);
    assert_eq!(rows(&read(out.join("density_n600.csv"))).len(), 51);
    assert_eq!(read(out.join("distance.csv")).lines().nth(1).unwrap(), "n,m,c_m,sup_distance");

    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"schema_version": 1, "kind": "coverage", "coverage": {"n": 1000, "runs": 5, "k_override": 1000.0}}"#,
    );
    let out = tmp.path().join("c");
    assert!(run(&["experiment", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let r = rows(&read(out.join("coverage.csv")));
    assert_eq!(r[0][7], 1.0);
}
