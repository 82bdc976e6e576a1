// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bgl_sff_cli::csvio::{read_curve, read_metrics, CURVE_HEADER, TRAJECTORY_HEADER};

fn bglsff(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bglsff"))
        .current_dir(dir)
        .env_remove("BGLSFF_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = bglsff(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

const SMALL_SFF: [&str; 11] =
    ["sff", "--model", "syk", "--majoranas", "8", "--beta", "5", "--gamma", "1e-3", "--realizations", "10"];

#[test]
fn sff_writes_curve_with_preamble() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_SFF.to_vec();
    args.extend(["--out", "c.csv"]);
    ok(dir.path(), &args);
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.starts_with("# bglsff curve\n"));
    assert!(text.contains("# config beta = 5\n"));
    assert!(text.contains("# meta n_ok = 10\n"));
    assert!(!text.contains("workers"));
    assert_eq!(data_lines(&dir.path().join("c.csv"))[0], CURVE_HEADER.join(","));
    let (curve, _) = read_curve(&dir.path().join("c.csv")).unwrap();
    assert_eq!(curve.n_ok, 10);
    assert_eq!(curve.times[0], 0.1);
    assert!((curve.times.last().unwrap() - 1e6).abs() < 1e-6);
}

#[test]
fn preamble_reruns_to_identical_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_SFF.to_vec();
    args.extend(["--evaluator", "filtered", "--filter", "lorentzian", "--include-zero", "--out", "a.csv"]);
    ok(dir.path(), &args);
    let (_, pre) = read_curve(&dir.path().join("a.csv")).unwrap();
    let conf: String = pre.config_text().replace("out = a.csv", "out = b.csv");
    fs::write(dir.path().join("a.conf"), conf).unwrap();
    ok(dir.path(), &["sff", "--config", "a.conf"]);
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(a.replace("out = a.csv", "out = b.csv"), b);
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.conf"), "beta = 1\nrealizations = 3\nout = x.csv\n").unwrap();
    let out = bglsff(dir.path(), &["sff", "--config", "x.conf", "--beta", "2", "--print-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("beta = 2\n"), "{text}");
    assert!(text.contains("realizations = 3\n"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn power_filter_at_two_equals_bgl() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = SMALL_SFF.to_vec();
    a.extend(["--out", "a.csv"]);
    let mut b = SMALL_SFF.to_vec();
    b.extend(["--evaluator", "filtered", "--filter", "power", "--delta", "2", "--out", "b.csv"]);
    ok(dir.path(), &a);
    ok(dir.path(), &b);
    assert_eq!(data_lines(&dir.path().join("a.csv")), data_lines(&dir.path().join("b.csv")));
}

#[test]
fn workers_env_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_SFF.to_vec();
    args.extend(["--out", "c.csv"]);
    ok(dir.path(), &args);
    let first = fs::read(dir.path().join("c.csv")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bglsff"))
        .current_dir(dir.path())
        .env("BGLSFF_WORKERS", "3")
        .args(&args)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(first, fs::read(dir.path().join("c.csv")).unwrap());

    let bad = Command::new(env!("CARGO_BIN_EXE_bglsff"))
        .current_dir(dir.path())
        .env("BGLSFF_WORKERS", "many")
        .args(&args)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 6] = [
        &["sff", "--majoranas", "13", "--out", "c.csv"],
        &["sff", "--beta", "-1", "--out", "c.csv"],
        &["sff", "--realizations", "0", "--out", "c.csv"],
        &["sff", "--t-min", "10", "--t-max", "1", "--out", "c.csv"],
        &["sff", "--no-such-flag", "--out", "c.csv"],
        &["sweep", "--param", "delta", "--evaluator", "unitary", "--values", "1,2", "--out", "m.csv"],
    ];
    for args in cases {
        let out = bglsff(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    assert!(!dir.path().join("c.csv").exists());
}

#[test]
fn resource_limit_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = bglsff(
        dir.path(),
        &["sff", "--model", "goe", "--dim", "4096", "--evaluator", "dephasing-jumps", "--out", "c.csv"],
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_sweep_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // the metrics path is a directory, so the final write fails after the curves were written
    fs::create_dir(dir.path().join("m.csv")).unwrap();
    let out = bglsff(
        dir.path(),
        &[
            "sweep",
            "--majoranas",
            "8",
            "--beta",
            "5",
            "--realizations",
            "4",
            "--values",
            "0,1e-3",
            "--curves-dir",
            "curves",
            "--out",
            "m.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let left: Vec<_> = fs::read_dir(dir.path().join("curves")).unwrap().collect();
    assert!(left.is_empty(), "partial curves left behind: {left:?}");
}

#[test]
fn sweep_then_analyze_agree() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "sweep",
            "--majoranas",
            "10",
            "--beta",
            "5",
            "--realizations",
            "20",
            "--epsilon",
            "0.3",
            "--values",
            "0,1e-3",
            "--curves-dir",
            "curves",
            "--out",
            "m.csv",
        ],
    );
    let (rows, pre) = read_metrics(&dir.path().join("m.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(pre.meta.iter().any(|(k, _)| k == "argmax_ratio"));
    let curve = dir.path().join("curves").join("curve_001_gamma_0.001.csv");
    ok(dir.path(), &["analyze", "--input", curve.to_str().unwrap(), "--epsilon", "0.3", "--out", "a.csv"]);
    let (single, _) = read_metrics(&dir.path().join("a.csv")).unwrap();
    assert_eq!(single[0].parameter, "gamma");
    assert_eq!(single[0].value, Some(1e-3));
    let (a, b) = (single[0].metrics.as_ref().unwrap(), rows[1].metrics.as_ref().unwrap());
    assert_eq!((a.t_d, a.t_p, a.ratio), (b.t_d, b.t_p, b.ratio));

    // a per-value curve re-runs as the sff job it came from
    let (_, cpre) = read_curve(&curve).unwrap();
    let conf: String = cpre
        .config_text()
        .lines()
        .map(|l| if l.starts_with("out =") { "out = again.csv\n".into() } else { format!("{l}\n") })
        .collect();
    fs::write(dir.path().join("c.conf"), conf).unwrap();
    ok(dir.path(), &["sff", "--config", "c.conf"]);
    assert_eq!(data_lines(&curve), data_lines(&dir.path().join("again.csv")));
}

#[test]
fn analyze_reports_bad_rows_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "# bglsff curve\nt,f_mean,f_stderr,n_ok\n0.1,1,0,1\n0.2,oops,0,1\n").unwrap();
    let out = bglsff(dir.path(), &["analyze", "--input", "bad.csv", "--out", "m.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:4:"));
    let missing = bglsff(dir.path(), &["analyze", "--input", "nope.csv", "--out", "m.csv"]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn evolve_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "evolve",
            "--model",
            "goe-with-x",
            "--dim",
            "12",
            "--beta",
            "1",
            "--gamma",
            "0.2",
            "--t-max",
            "20",
            "--include-zero",
            "--out",
            "traj.csv",
        ],
    );
    let lines = data_lines(&dir.path().join("traj.csv"));
    assert_eq!(lines[0], TRAJECTORY_HEADER.join(","));
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 1.0).abs() < 1e-12);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] - 1.0).abs() < 1e-7, "purity {}", v[2]);
        assert!(v[4] < 1e-3);
    }

    let bad = bglsff(dir.path(), &["evolve", "--model", "goe", "--x-source", "model", "--out", "t.csv"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn plot_renders_curves_and_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_SFF.to_vec();
    args.extend(["--out", "c.csv"]);
    ok(dir.path(), &args);
    ok(
        dir.path(),
        &[
            "sweep",
            "--majoranas",
            "10",
            "--beta",
            "5",
            "--realizations",
            "20",
            "--epsilon",
            "0.3",
            "--values",
            "0,1e-3,1e-2",
            "--out",
            "m.csv",
        ],
    );
    ok(dir.path(), &["plot", "c.csv", "--out", "c.svg", "--title", "F(t)"]);
    ok(dir.path(), &["plot", "m.csv", "--out", "m.svg"]);
    let svg = fs::read_to_string(dir.path().join("c.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    assert!(fs::read_to_string(dir.path().join("m.svg")).unwrap().contains("<circle"));
    let mixed = bglsff(dir.path(), &["plot", "c.csv", "m.csv", "--out", "x.svg"]);
    assert_eq!(mixed.status.code(), Some(2));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let help = bglsff(dir.path(), &["--help"]);
    assert!(help.status.success());
    let text = String::from_utf8(help.stdout).unwrap();
    for cmd in ["sff", "sweep", "evolve", "analyze", "plot"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    assert!(bglsff(dir.path(), &["--version"]).status.success());
}
