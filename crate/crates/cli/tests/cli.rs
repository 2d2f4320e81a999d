use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expphi2"))
}

#[test]
fn dry_run_prints_plan_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = bin()
        .args(["--dry-run", "--out"])
        .arg(&out)
        .arg("verify")
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[13] determinism"));
    assert!(!out.exists());
}

#[test]
fn invalid_config_is_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "grid = 48\n").unwrap();
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("sample-gff")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
}

#[test]
fn ensemble_writes_versioned_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "grid = 32\nn = 3\nensemble = 50\n").unwrap();
    let out = dir.path().join("o");
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "3", "ensemble", "--task", "wick_mean"])
        .output()
        .unwrap();
    assert!(
        o.status.code().is_some_and(|c| c <= 1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["body"]["config"]["seed"], 3);
    let csv = std::fs::read_to_string(out.join("tables/report_verdicts.csv")).unwrap();
    assert!(csv.starts_with("name,estimate,ci_low,ci_high,n,tolerance,rule,passed"));
}

#[test]
fn solve_snapshots_reload_as_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "grid = 32\nn = 3\ndt = 0.05\nhorizon = 0.1\n").unwrap();
    let a = dir.path().join("a");
    let run = |out: &std::path::Path, extra: &[&str]| {
        let o = bin()
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .arg("solve")
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&a, &[]);
    let snap = a.join("phi_t0.100000.snap");
    assert!(snap.exists());
    let b = dir.path().join("b");
    run(&b, &["--initial", snap.to_str().unwrap()]);
    assert!(b.join("tables/diagnostics.csv").exists());
}
