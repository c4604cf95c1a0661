use std::fs;
use std::path::Path;
use std::process::Command;

use frackappa::config::validate_config;
use frackappa::sweep::{run_sweep, write_sweep, SWEEP_COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frackappa"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.json");
    fs::write(&p, body).unwrap();
    p
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"alpha": [0.4], "n_grid": 8}"#);
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha") && err.contains("n_grid"), "{err}");
}

#[test]
fn missing_config_exits_with_one() {
    let out = bin().args(["sweep", "--config", "/nonexistent/run.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_schema_and_side_tables() {
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("cq.csv");
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"n_grid": 400, "alpha": [1.0, 0.9], "emit": ["sweep", "lambda", "trk", "threelevel"], "output": {:?}}}"#,
            main.to_str().unwrap()
        ),
    );
    let out = bin().args(["sweep", "--config"]).arg(&cfg).arg("--jobs").arg("2").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&main).unwrap();
    assert_eq!(text.lines().next().unwrap(), SWEEP_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(column(&text, "alpha"), ["1.00000000000e0", "9.00000000000e-1"]);
    assert_eq!(column(&text, "converged"), ["true", "true"]);
    for kind in ["lambda", "trk", "threelevel"] {
        let side = fs::read_to_string(dir.path().join(format!("cq.{kind}.csv"))).unwrap();
        assert!(side.lines().count() > 2, "{kind}");
    }
    let tl = fs::read_to_string(dir.path().join("cq.threelevel.csv")).unwrap();
    let ff: f64 = column(&tl, "kappa1_ff")[1].parse().unwrap();
    let sos: f64 = column(&tl, "kappa1")[1].parse().unwrap();
    assert!((ff - sos).abs() / sos < 1e-2);
}

#[test]
fn side_tables_need_an_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_grid": 200, "alpha": [1.0], "emit": ["trk"]}"#);
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stdout_sweep_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_grid": 300, "k_states": 30, "alpha": {"start": 1.0, "stop": 0.8, "step": 0.1}}"#);
    let run = |jobs: &str| bin().args(["sweep", "--jobs", jobs, "--config"]).arg(&cfg).output().unwrap();
    let a = run("1");
    let b = run("3");
    assert_eq!(a.status.code(), b.status.code());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn wavefunction_table_shape_and_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_grid": 500}"#);
    let out_path = dir.path().join("wf.csv");
    let out = bin()
        .args(["wavefunctions", "--alpha", "1.0", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,V,psi0,psi1,psi2,psi3,psi4");
    assert_eq!(text.lines().count(), 501);
    for k in 0..5 {
        let psi: Vec<f64> = column(&text, &format!("psi{k}")).iter().map(|v| v.parse().unwrap()).collect();
        let top = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let big: Vec<f64> = psi.into_iter().filter(|v| v.abs() > 1e-6 * top).collect();
        let nodes = big.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(nodes, k);
    }
}

#[test]
fn fractional_wavefunctions_start_at_calibrated_wall() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), r#"{"n_grid": 300, "k_states": 30, "alpha": [0.8]}"#);
    let out = bin()
        .args(["wavefunctions", "--alpha", "0.8", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let wf = String::from_utf8(out.stdout).unwrap();
    let x0: f64 = column(&wf, "x")[0].parse().unwrap();
    let x1: f64 = column(&wf, "x")[1].parse().unwrap();

    let cfg = validate_config(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
    let rows = run_sweep(&cfg).unwrap();
    let b = rows[0].report().unwrap().offset;
    assert!((x0 - (x1 - x0) - b).abs() < 1e-9, "{x0} {b}");
}

#[test]
fn symmetric_well_sweep_has_zero_hyperpolarizability() {
    let cfg = validate_config(r#"{"potential": "symmetric-ho", "n_grid": 301, "k_states": 30}"#).unwrap();
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 7);
    for r in &rows {
        let rep = r.report().unwrap();
        assert!(rep.kappa2_app.abs() < 1e-6, "alpha {}: {}", r.alpha, rep.kappa2_app);
        assert_eq!(rep.calibration_iterations, 0);
    }
}

#[test]
fn failed_rows_carry_the_error() {
    // one secant step cannot reach the wall tolerance at alpha < 1
    let cfg = validate_config(r#"{"n_grid": 300, "k_states": 30, "calib_max_iter": 1, "alpha": [1.0, 0.8]}"#).unwrap();
    let rows = run_sweep(&cfg).unwrap();
    assert!(rows[1].outcome.is_err());
    let mut buf = Vec::new();
    write_sweep(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let line = text.lines().nth(2).unwrap();
    assert!(line.starts_with("8.00000000000e-1,"));
    assert!(line.contains(",false,"));
    assert!(!line.ends_with(','));
}

#[test]
fn check_command_passes() {
    let out = bin().arg("check").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
