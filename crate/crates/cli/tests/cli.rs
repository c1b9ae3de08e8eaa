use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const HEADER: &str = "t,x_c,y_c,theta_c,theta1,theta2,v_c,omega_c,v0,omega0,e_x,e_y,e_theta,\
xi_hat_theta1,xi_hat_theta2,xi_hat_r,tau_theta1,tau_theta2,tau_r";

fn cartpush(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartpush"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    v.sort();
    v
}

/// Short impact bench with one controller; returns the output directory.
fn short_impact(root: &Path) -> PathBuf {
    let out = root.join("impact");
    let o = cartpush(&[
        "bench",
        "--suite",
        "impact",
        "--controller",
        "gob",
        "--duration",
        "0.3",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn bench_writes_logs_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_impact(dir.path());
    for f in [
        "report.json",
        "summary.csv",
        "summary.txt",
        "scenarios/impact-gob.toml",
        "logs/impact-gob.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let log = fs::read_to_string(out.join("logs/impact-gob.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), HEADER);
    assert_eq!(log.lines().count(), 301);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["suite"], "impact");
    assert_eq!(report["reports"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_runs_a_saved_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let bench = short_impact(dir.path());
    let out = dir.path().join("sim");
    let o = cartpush(&[
        "simulate",
        "--scenario",
        path_str(&bench.join("scenarios")),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(out.join("logs/impact-gob.csv")).unwrap(),
        fs::read(bench.join("logs/impact-gob.csv")).unwrap()
    );
    assert!(!out.join("scenarios").exists());
}

#[test]
fn malformed_scenario_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let bench = short_impact(dir.path());
    let path = bench.join("scenarios/impact-gob.toml");
    let text = fs::read_to_string(&path).unwrap().replacen("duration", "durration", 1);
    fs::write(&path, text).unwrap();
    let o = cartpush(&[
        "simulate",
        "--scenario",
        path_str(&path),
        "--out",
        path_str(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("durration"));
}

#[test]
fn missing_scenario_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = cartpush(&[
        "simulate",
        "--scenario",
        path_str(&missing),
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unknown_suite_and_flags_exit_2() {
    let o = cartpush(&["bench", "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("static-poses"));
    assert_eq!(
        cartpush(&["bench", "--suite", "impact", "--fast"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cartpush(&["bench", "--suite", "impact", "--jobs", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn seed_changes_only_the_noisy_reference() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        let out = dir.path().join(seed);
        let o = cartpush(&[
            "bench",
            "--suite",
            "trajectories",
            "--planner",
            "lf",
            "--duration",
            "1",
            "--seed",
            seed,
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out.join("logs")
    };
    let (a, b) = (run("1"), run("2"));
    let files = csv_files(&a);
    assert_eq!(files.len(), 5);
    for f in files {
        let name = f.file_name().unwrap();
        let same = fs::read(&f).unwrap() == fs::read(b.join(name)).unwrap();
        assert_eq!(same, name != "noisy-line-lf.csv", "{name:?}");
    }
}

#[test]
fn export_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let bench = short_impact(dir.path());
    let logs = bench.join("logs");
    let once = dir.path().join("once");
    let twice = dir.path().join("twice");
    assert!(
        cartpush(&["export", "--logs", path_str(&logs), "--out", path_str(&once)])
            .status
            .success()
    );
    assert!(
        cartpush(&["export", "--logs", path_str(&once), "--out", path_str(&twice)])
            .status
            .success()
    );
    assert!(cartpush(&["export", "--logs", path_str(&twice)]).status.success());
    let original = fs::read(logs.join("impact-gob.csv")).unwrap();
    assert_eq!(fs::read(once.join("impact-gob.csv")).unwrap(), original);
    assert_eq!(fs::read(twice.join("impact-gob.csv")).unwrap(), original);
}

#[test]
fn export_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert!(cartpush(&["export", "--logs", path_str(&empty)]).status.success());
    assert_eq!(
        cartpush(&["export", "--logs", path_str(&dir.path().join("none"))])
            .status
            .code(),
        Some(3)
    );
    fs::write(empty.join("bad.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(cartpush(&["export", "--logs", path_str(&empty)]).status.code(), Some(2));
}
