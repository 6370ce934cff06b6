use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(dir: &Path, sigma: f64, extra: &str) -> PathBuf {
    let path = dir.join("run.json");
    let text = format!(
        r#"{{"physics": {{"g": 1.0, "p0": -1.0, "sigma": {sigma:?}, "rho": {{"type": "poly", "coeffs": [1.0]}}}},
"numerics": {{"np": 32, "nq": 32}}, "output": "{}"{extra}}}"#,
        dir.join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capgrav")).args(args).arg("--config").arg(config).output().unwrap()
}

#[test]
fn classify_reports_a_simple_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["classify"], &config(dir.path(), 1.0, ""));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "Simple");
    let file = std::fs::read(dir.path().join("out/classify.json")).unwrap();
    assert_eq!(file, out.stdout);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let cfg = config(d.path(), 1.0, "");
        assert!(run(&["coeffs"], &cfg).status.success());
        assert!(run(&["dispersion"], &cfg).status.success());
    }
    for f in ["coeffs.json", "dispersion.csv", "dispersion_roots.csv"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn branch_dumps_reproduce_their_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 1.0, "");
    let out = run(&["branch", "--steps", "3"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bdir = dir.path().join("out/branch_pure-1");
    let csv = std::fs::read_to_string(bdir.join("branch.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let (rc, sc) = (
        header.iter().position(|h| *h == "residual").unwrap(),
        header.iter().position(|h| *h == "step").unwrap(),
    );
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let recorded: f64 = cells[rc].parse().unwrap();
        let step: usize = cells[sc].parse().unwrap();
        let field = bdir.join(format!("field_{step:04}.dump"));
        let v = run(&["verify", "--field", field.to_str().unwrap()], &cfg);
        let stdout = String::from_utf8_lossy(&v.stdout);
        let line = stdout.lines().find(|l| l.contains("height-residual")).unwrap();
        let value: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!((value - recorded).abs() <= 1e-14, "step {step}: {value} vs {recorded}");
    }
}

#[test]
fn laminar_field_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 1.0, "");
    assert!(run(&["laminar", "--lambda", "2.0"], &cfg).status.success());
    let field = dir.path().join("out/laminar_0.dump");
    let v = run(&["verify", "--field", field.to_str().unwrap()], &cfg);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stdout));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 1.0, r#", "tolerance": 1e-3"#);
    let out = run(&["classify"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    let bad = Command::new(env!("CARGO_BIN_EXE_capgrav")).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let text = format!(
        r#"{{"physics": {{"g": 1.0, "p0": -1.0, "sigma": 0.0, "rho": {{"type": "poly", "coeffs": [1.0, -0.1]}}}},
"output": "{}"}}"#,
        dir.path().join("out").display()
    );
    std::fs::write(&cfg, text).unwrap();
    // The stratification puts the laminar floor at λ = 4.
    let out = run(&["laminar", "--lambda", "3.0"], &cfg);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: domain-error"), "{err}");
}
