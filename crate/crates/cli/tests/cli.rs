use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nondiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nondiv"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nondiv-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn zero_data_solves_to_zero() {
    let dir = scratch("zero");
    let cfg = write_config(
        &dir,
        r#"{"domain":{"kind":"l_shape"},"coefficients":{"preset":"heat"},"task":"solve_elliptic","params":{"f":"0","g":"0"}}"#,
    );
    let out = nondiv(&["solve-elliptic", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u,is_boundary"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(
        rows.iter().all(|r| r.split(',').nth(2) == Some("0")),
        "{csv}"
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn malformed_coefficient_exits_with_config_error() {
    let dir = scratch("bad");
    let cfg = write_config(
        &dir,
        r#"{"domain":{"kind":"unit_square"},"coefficients":{"a11":"1 + x*","a22":"1","lambda":1},"task":"verify"}"#,
    );
    let out = nondiv(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("coefficients.a11"), "{err}");
    assert!(err.contains("column 7"), "{err}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_config_is_a_runtime_error() {
    let out = nondiv(&["evolve", "--config", "/nonexistent/exp.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_is_deterministic() {
    let dir = scratch("verify");
    let cfg = write_config(
        &dir,
        r#"{"domain":{"kind":"unit_square"},"coefficients":{"preset":"variable"},"discretization":{"h":0.125},"task":"verify"}"#,
    );
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    let ra = nondiv(&[
        "verify",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--jobs",
        "1",
        "--out",
        a.to_str().unwrap(),
    ]);
    let rb = nondiv(&[
        "verify",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--jobs",
        "2",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(
        ra.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ra.stderr)
    );
    assert_eq!(rb.status.code(), Some(0));
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let report: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["summary"]["fail"], 0);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failing_check_exits_one() {
    let dir = scratch("central");
    let cfg = write_config(
        &dir,
        r#"{"domain":{"kind":"unit_square"},"coefficients":{"preset":"drift"},"discretization":{"h":0.125,"scheme":"central"},"task":"verify"}"#,
    );
    let out = nondiv(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("FAIL  monotonicity"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn evolve_honours_time_and_method_flags() {
    let dir = scratch("evolve");
    let cfg = write_config(
        &dir,
        r#"{"domain":{"kind":"unit_square"},"coefficients":{"preset":"heat"},"discretization":{"h":0.25},"task":"evolve"}"#,
    );
    let out = nondiv(&[
        "evolve",
        "--config",
        &cfg,
        "--t",
        "0,0.05,0.1",
        "--method",
        "be:64",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let times: std::collections::BTreeSet<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(times.into_iter().collect::<Vec<_>>(), ["0", "0.05", "0.1"]);

    let bad = nondiv(&["evolve", "--config", &cfg, "--method", "rk4"]);
    assert_eq!(bad.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn catalog_lists_presets_and_domains() {
    let out = nondiv(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for p in [
        "heat",
        "drift",
        "damped",
        "anisotropic",
        "variable",
        "lipschitz-rough",
    ] {
        assert!(text.contains(p), "{p}");
    }
    let json = nondiv(&["catalog", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v["presets"].as_array().unwrap().len() >= 6);
    assert_eq!(v["domains"].as_array().unwrap().len(), 5);
}
