use std::path::Path;
use std::process::{Command, Output};

const FLAT: &str = r#"{"R": 1.0, "K_terms": [{"kind": "const", "c": 1.0}], "rho1": 1.0, "rho2": 2.0, "delta0": 0.5}"#;

fn exwave(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_exwave"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.env_remove("EXWAVE_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn testfn_flat_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &format!(r#"{{"metric": {FLAT}, "bq_q": [0.3]}}"#));
    let out = dir.path().join("o");
    let res = exwave(&["testfn"], Some(&cfg), &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(summary(&out)["pass"], true);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|o| o["file"] == "phi0.csv"));
}

#[test]
fn log_growth_metric_fails_decay() {
    let dir = tempfile::tempdir().unwrap();
    let metric = r#"{"R": 1.0, "K_terms": [{"kind": "const", "c": 1.0}, {"kind": "log_bracket", "c": 0.1}], "rho1": 1.0, "rho2": 2.0, "delta0": 0.5}"#;
    let cfg = write(dir.path(), "c.json", &format!(r#"{{"metric": {metric}}}"#));
    let out = dir.path().join("o");
    assert_eq!(exwave(&["testfn"], Some(&cfg), &out).status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["checks"][0]["name"], "decay");
    assert_eq!(s["checks"][0]["detail"]["error"], "DecayViolation");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    let out = dir.path().join("o");
    assert_eq!(exwave(&["testfn"], Some(&bad), &out).status.code(), Some(2));
    assert_eq!(exwave(&["testfn"], None, &out).status.code(), Some(2));
    assert_eq!(exwave(&["nonsense"], None, &out).status.code(), Some(2));
    let unknown = write(dir.path(), "u.json", &format!(r#"{{"metric": {FLAT}, "typo": 1}}"#));
    assert_eq!(exwave(&["testfn"], Some(&unknown), &out).status.code(), Some(2));
}

fn sweep_config(p: f64) -> String {
    format!(r#"{{"base": {{"metric": {FLAT}, "p": {p}, "epsilon": 0.4, "t_max": 3000.0}}, "epsilons": [0.4, 0.3, 0.2, 0.1, 0.05]}}"#)
}

#[test]
fn sweep_writes_fit_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &sweep_config(2.0));
    let out = dir.path().join("o");
    assert_eq!(exwave(&["sweep"], Some(&cfg), &out).status.code(), Some(0));
    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert!(fit["slope"].as_f64().unwrap() < 0.0);
    let csv = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert!(csv.starts_with("epsilon,T_num,outcome\n"));
    assert_eq!(csv.lines().count(), 6);
    assert!(std::fs::read_to_string(out.join("lifespan.svg")).unwrap().contains("<circle"));
}

#[test]
fn dry_run_executes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &sweep_config(2.0));
    let out = dir.path().join("o");
    let res = exwave(&["sweep", "--dry-run"], Some(&cfg), &out);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&res.stdout).matches("ε =").count(), 5);
    assert!(!out.exists());
}

#[test]
fn strict_mode_rejects_supercritical_p() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &sweep_config(4.0));
    let out = dir.path().join("o");
    let res = exwave(&["sweep", "--strict", "--dry-run"], Some(&cfg), &out);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("out of range"));
}

#[test]
fn obstacle_commands() {
    let dir = tempfile::tempdir().unwrap();
    let circle = write(dir.path(), "c.json", r#"{"obstacle": {"a0": 0.2, "delta2": 0.2}, "certificate_n_r": 100, "certificate_n_theta": 16}"#);
    assert_eq!(exwave(&["obstacle"], Some(&circle), &dir.path().join("c")).status.code(), Some(0));

    let ellipse = write(dir.path(), "e.json", r#"{"obstacle": {"a0": 0.5, "cos": [0.0, 0.2], "delta2": 0.2}}"#);
    let out = dir.path().join("e");
    assert_eq!(exwave(&["obstacle"], Some(&ellipse), &out).status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert!(cert["min_df_dr"].as_f64().unwrap() >= 0.08);
    assert!(std::fs::read_to_string(out.join("metric.csv")).unwrap().starts_with("x,y,g11,g12,g22\n"));

    // the exported map fed back as an external table
    let table = write(
        dir.path(),
        "t.json",
        &format!(r#"{{"table": {{"path": {:?}, "r3": 0.2}}}}"#, out.join("map.csv")),
    );
    assert_eq!(exwave(&["obstacle"], Some(&table), &dir.path().join("t")).status.code(), Some(0));

    let too_big = write(dir.path(), "b.json", r#"{"obstacle": {"a0": 3.0, "delta2": 0.2}}"#);
    let out = dir.path().join("b");
    assert_eq!(exwave(&["obstacle"], Some(&too_big), &out).status.code(), Some(1));
    assert_eq!(summary(&out)["checks"][0]["detail"]["error"], "ObstacleBoundsViolation");
}

#[test]
fn simulate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.json", &format!(r#"{{"metric": {FLAT}, "p": 2.0, "epsilon": 0.5, "t_max": 100.0}}"#));
    let root = dir.path().join("runs");
    assert_eq!(exwave(&["simulate"], Some(&cfg), &root.join("sim")).status.code(), Some(0));
    let result: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(root.join("sim/result.json")).unwrap()).unwrap();
    assert_eq!(result["outcome"]["kind"], "BlewUp");
    let res = exwave(&["report"], None, &root);
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stdout).contains("PASS simulation"));
    assert!(root.join("report.md").exists());
}

#[test]
fn thread_env_fallback_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &sweep_config(2.0));
    let res = Command::new(env!("CARGO_BIN_EXE_exwave"))
        .args(["sweep", "--dry-run", "--config"])
        .arg(&cfg)
        .env("EXWAVE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    let res = Command::new(env!("CARGO_BIN_EXE_exwave"))
        .args(["sweep", "--dry-run", "--config"])
        .arg(&cfg)
        .env("EXWAVE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
}
