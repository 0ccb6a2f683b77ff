//! End-to-end runs of the `cascade` binary.

use std::path::Path;
use std::process::{Command, Output};

use anyhow::Result;

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
        .args(args)
        .env_remove("CASCADE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn exact_example_one_is_conservative() {
    let o = cascade(&["exact", "--example", "1", "--t", "1.0", "--n-max", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("time,n,value\n"));
    let r = rows(&out);
    assert_eq!(r.len(), 64);
    let want = 1f64.tanh().powi(2) / 1f64.cosh();
    assert!((r[2][2] - want).abs() < 1e-15);
    assert!(stderr(&o).contains("summary: conservative"));
}

#[test]
fn stationary_covariance_table() {
    let o = cascade(&["stationary", "--covariance", "--n-max", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 64);
    for row in r {
        let want = 1.0 / (row[0] + row[1] - 1.0);
        assert_eq!(row[2], want);
        assert!((row[3] - want).abs() < 1e-12);
    }
}

#[test]
fn spectrum_is_positive() {
    let o = cascade(&["spectrum", "--model", "B", "--n-basis", "64", "--modes", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 8);
    assert!(r.iter().all(|row| row[1] > 0.0));
    assert!(r.windows(2).all(|w| w[1][1] > w[0][1]));
    assert!((r[0][1] - 0.857_621_342_640_06).abs() < 1e-9);
}

#[test]
fn missing_alpha_is_a_validation_error() {
    let o = cascade(&["exact", "--example", "6", "--t", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"));
    assert!(stderr(&o).contains("missing"));
}

#[test]
fn horizon_is_a_numerical_failure() {
    let o = cascade(&["exact", "--example", "6", "--alpha", "2", "--t", "1.0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("horizon"));
}

#[test]
fn all_config_errors_are_listed() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "integrate", "flavour": 1, "parameters": {"nu": -0.5, "p": 2, "n_max": "many", "extra": true}}"#,
    )?;
    let o = cascade(&["validate", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for key in ["flavour", "parameters.extra", "n_max"] {
        assert!(err.contains(key), "{key} missing from {err}");
    }
    std::fs::write(&cfg, r#"{"mode": "integrate", "parameters": {"nu": -0.5, "p": 2}}"#)?;
    let err = stderr(&cascade(&["validate", path_str(&cfg)]));
    assert!(err.contains("nu:") && err.contains("p:"), "{err}");
    Ok(())
}

#[test]
fn config_file_drives_a_run() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"mode": "exact", "model": "A", "parameters": {{"example_id": 3, "t_grid": [2.0], "n_max": 17}}, "output": {{"path": "{}", "format": "json"}}}}"#,
            path_str(&out)
        ),
    )?;
    assert_eq!(cascade(&["validate", path_str(&cfg)]).status.code(), Some(0));
    let o = cascade(&["exact", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out)?)?;
    let last = doc["rows"].as_array().unwrap().last().unwrap().as_array().unwrap().clone();
    assert_eq!(last[1].as_f64(), Some(17.0));
    assert!((last[2].as_f64().unwrap() - (-2f64).exp()).abs() < 1e-12);
    let o = cascade(&["integrate", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2), "mode mismatch is rejected");
    Ok(())
}

#[test]
fn dry_run_computes_nothing() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("x.csv");
    let o = cascade(&["integrate", "--n-max", "32", "--dry-run", "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!out.exists());
    let resolved: serde_json::Value = serde_json::from_str(&stdout(&o))?;
    assert_eq!(resolved["parameters"]["n_max"], 32);
    assert_eq!(resolved["mode"], "integrate");
    Ok(())
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["integrate", "--n-max", "16", "--forcing", "white_noise", "--t", "0.5,1", "--dt", "0.01"];
    let run = |seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_cascade"));
        c.args(args);
        match seed {
            Some(s) => c.env("CASCADE_SEED", s),
            None => c.env_remove("CASCADE_SEED"),
        };
        c.output().expect("binary runs")
    };
    let a = run(Some("17"));
    let b = run(Some("17"));
    let c = run(Some("18"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(run(Some("nope")).status.code(), Some(2));
}

#[test]
fn exact_and_integrated_outputs_compare() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let a = dir.path().join("exact.csv");
    let b = dir.path().join("int.csv");
    let o = cascade(&["exact", "--example", "1", "--t", "1", "--n-max", "256", "-o", path_str(&a)]);
    assert_eq!(o.status.code(), Some(0));
    let o = cascade(&["integrate", "--example", "1", "--t", "1", "--n-max", "256", "-o", path_str(&b)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = cascade(&["compare", path_str(&a), path_str(&b), "--tolerance", "1e-6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = cascade(&["compare", path_str(&a), path_str(&a), "--tolerance", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("value,0.000000e0,0.000000e0"));
    let o = cascade(&["compare", path_str(&a), path_str(&b), "--tolerance", "1e-18"]);
    assert_eq!(o.status.code(), Some(1));
    Ok(())
}

#[test]
fn compare_rejects_schema_mismatch() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "n,value\n1,0.5\n")?;
    std::fs::write(&b, "k,value\n1,0.5\n")?;
    assert_eq!(cascade(&["compare", path_str(&a), path_str(&b)]).status.code(), Some(2));
    Ok(())
}

#[test]
fn feynman_kac_matches_spectral_in_standard_errors() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let a = dir.path().join("spectral.csv");
    let b = dir.path().join("fk.csv");
    let o = cascade(&["exact", "--model", "B", "--x", "0.5,0.8", "--t", "0.5", "-o", path_str(&a)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = cascade(&[
        "integrate", "--model", "B", "--method", "feynman_kac", "--x", "0.5,0.8", "--t", "0.5", "--paths", "20000",
        "--seed", "5", "-o", path_str(&b),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = cascade(&["compare", path_str(&a), path_str(&b), "--sigma", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    Ok(())
}

#[test]
fn asymptotics_and_inviscid_run() {
    let o = cascade(&["asymptotics", "--alpha", "0.5", "--zeta", "1", "--t", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("dissipative_finite_rate"));
    let o = cascade(&["inviscid", "--nu-grid", "0.05,0.1", "--n-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&stdout(&o)).len(), 4);
    let o = cascade(&["asymptotics", "--zeta", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
