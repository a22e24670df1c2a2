//! The `anisum` binary end to end.

use std::process::Command;

fn anisum(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_anisum"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn gen_then_norm_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    let p = path.to_str().unwrap();
    let out = anisum(&[
        "gen", "--dim", "2", "--count", "3", "--kind", "lp:2", "--seed", "1", "--out", p,
    ]);
    assert!(out.status.success());
    let first = std::fs::read(&path).unwrap();
    anisum(&[
        "gen", "--dim", "2", "--count", "3", "--kind", "lp:2", "--seed", "1", "--out", p,
    ]);
    assert_eq!(std::fs::read(&path).unwrap(), first);

    let report = dir.path().join("r.json");
    let args = [
        "norm",
        "--in",
        p,
        "--which",
        "aniso",
        "--s",
        "2",
        "--q",
        "1",
        "--r",
        "2",
        "--out",
        report.to_str().unwrap(),
    ];
    let a = anisum(&args);
    let b = anisum(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["defaults"]["restarts"], 32);
    assert_eq!(json["estimate"]["bound"], "Lower");
}

#[test]
fn regime_rejection_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    std::fs::write(
        &path,
        r#"{"version": 1, "space": {"dim": 2, "kind": "lp", "p": 2}, "sequence": [[1, 0], [0, 1]]}"#,
    )
    .unwrap();
    let out = anisum(&[
        "norm",
        "--in",
        path.to_str().unwrap(),
        "--which",
        "aniso",
        "--s",
        "2",
        "--q",
        "1",
        "--r",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate regime: s < r"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(anisum(&["nonsense"]).status.code(), Some(1));
    assert_eq!(anisum(&["norm"]).status.code(), Some(1));
    assert_eq!(anisum(&["--help"]).status.code(), Some(0));
}

#[test]
fn suite_equality_check_passes() {
    let out = anisum(&["suite", "--check", "equality", "--seed", "7"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let check = &report["checks"][0];
    assert_eq!(check["id"], "equality");
    assert_eq!(check["status"], "pass");
    assert!(check["max_gap"].as_f64().unwrap() <= 1e-2);
    assert_eq!(report["checks"].as_array().unwrap().len(), 1);
}

#[test]
fn thread_override_keeps_reports_identical() {
    let base = anisum(&["suite", "--check", "scalar-collapse", "--seed", "3"]);
    let one = Command::new(env!("CARGO_BIN_EXE_anisum"))
        .args(["suite", "--check", "scalar-collapse", "--seed", "3"])
        .env("ANISUM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(base.stdout, one.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_anisum"))
        .args(["suite", "--check", "scalar-collapse"])
        .env("ANISUM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
