use std::path::Path;
use std::process::{Command, Output};

use hydroblow::io::{read_csv, read_doc};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydroblow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn num(path: &Path, key: &str) -> f64 {
    read_doc(path).unwrap()[key].as_float().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn help_and_usage() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["profile", "--n", "many"])), 64);
    // no output directory anywhere
    assert_eq!(code(&run(&["profile"])), 64);
}

#[test]
fn profile_unit_discriminant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["profile", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let params = dir.path().join("params.toml");
    assert!((num(&params, "psi_plus") - 1.5).abs() < 1e-12);
    assert!((num(&params, "psi_minus") + 0.5).abs() < 1e-12);
    assert!((num(&params, "C") - 2f64.sqrt() / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    let (header, rows) = read_csv(dir.path().join("profile.csv")).unwrap();
    assert_eq!(header, ["z", "phi", "dphi", "ddphi"]);
    assert_eq!(rows.len(), 129);
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[128][1], 0.0);
    let cert = read_doc(dir.path().join("certification.toml")).unwrap();
    assert_eq!(cert["status"].as_str(), Some("certified"));
    assert!(cert["sup_residual"].as_float().unwrap() <= 1e-8);
    assert!(dir.path().join("effective_config.toml").exists());
}

#[test]
fn profile_two_segments() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["profile", "--segments", "2", "--n", "64", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(dir.path().join("profile.csv")).unwrap();
    let phi: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let changes = phi[1..phi.len() - 1]
        .windows(2)
        .filter(|w| w[0] * w[1] < 0.0 || w[1] == 0.0)
        .count();
    assert_eq!(changes, 1);
    let params = dir.path().join("params.toml");
    assert!((num(&params, "full_interval_nonlocal_constant") - 0.75).abs() < 1e-7);
}

#[test]
fn profile_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["profile", "--m", "-1", "--out", &out_arg(dir.path())])), 2);
    assert_eq!(code(&run(&["profile", "--m", "0", "--out", &out_arg(dir.path())])), 2);
    assert_eq!(code(&run(&["profile", "--height", "-2", "--out", &out_arg(dir.path())])), 2);
}

#[test]
fn profile_certification_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["profile", "--n", "16", "--tolerance", "1e-14", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&out), 3);
    let cert = read_doc(dir.path().join("certification.toml")).unwrap();
    assert_ne!(cert["status"].as_str(), Some("certified"));
    assert!(cert.contains_key("failed_invariant"));
}

#[test]
fn simulate1d_blowup_times() {
    for (lambda, expected) in [("1", 1.0), ("2", 0.5)] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["simulate1d", "--lambda", lambda, "--out", &out_arg(dir.path())]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let fit = dir.path().join("fit.toml");
        assert!((num(&fit, "T_est") - expected).abs() <= 1e-2 * expected);
        assert!(num(&fit, "r2") >= 0.999);
        let (header, rows) = read_csv(dir.path().join("trajectory.csv")).unwrap();
        assert_eq!(header.len(), 5);
        assert!(rows.len() > 10);
        assert!(rows.iter().all(|r| r[4] >= 0.0));
    }
}

#[test]
fn simulate1d_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate1d", "--initial", "zero", "--n", "64", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&out), 0);
    let fit = read_doc(dir.path().join("fit.toml")).unwrap();
    assert_eq!(fit["verdict"].as_str(), Some("no blowup detected"));
    // demanding blowup from zero data is a failed expectation
    let out = run(&[
        "simulate1d", "--initial", "zero", "--n", "64", "--expect-blowup", "true", "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn simulate2d_trace() {
    for k in ["1", "2"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&[
            "simulate2d", "--k", k, "--k-max", "32", "--nz", "64", "--t-end", "0.1",
            "--snapshot-times", "0.05,0.1", "--out", &out_arg(dir.path()),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let run_doc = dir.path().join("run.toml");
        assert!(num(&run_doc, "max_trace_rel_err") <= 0.02);
        assert!(num(&run_doc, "max_energy_drift") <= 1e-6);
        let (header, rows) = read_csv(dir.path().join("trace.csv")).unwrap();
        assert_eq!(header, ["t", "z", "w_trace", "self_similar_ref", "rel_err"]);
        assert_eq!(rows.len(), 3 * 65);
        let (_, energy) = read_csv(dir.path().join("energy.csv")).unwrap();
        assert!(energy.iter().all(|r| r[2] <= 1e-6));
    }
}

#[test]
fn simulate2d_zero_field_and_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate2d", "--zero-field", "--k-max", "16", "--nz", "32", "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(dir.path().join("trace.csv")).unwrap();
    assert!(rows.iter().all(|r| r[2] == 0.0));
    // k = 11 lies beyond the 2/3 cutoff of k_max = 16
    let out = run(&["simulate2d", "--k", "11", "--k-max", "16", "--nz", "32", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(header.len(), 11);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!((r[3] / r[4] - 1.0).abs() <= 1e-10, "m = {}", r[0]);
        assert!((r[1] + r[2] - 1.0).abs() <= 1e-11);
        assert!((r[8] - 1.0).abs() <= 1e-2, "m = {}: T_est = {}", r[0], r[8]);
        assert_eq!(r[10], 1.0);
    }
    let first = std::fs::read(dir.path().join("sweep.csv")).unwrap();
    let again = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["sweep", "--out", &out_arg(again.path())])), 0);
    assert_eq!(std::fs::read(again.path().join("sweep.csv")).unwrap(), first);
}

#[test]
fn sweep_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["sweep", "--m-list=", "--out", &out_arg(dir.path())])), 64);
    let out = run(&["sweep", "--m-list", "1,-1", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&out), 2);
    let (_, rows) = read_csv(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][10], 1.0);
    assert_eq!(rows[1][10], 0.0);
}

#[test]
fn config_documents() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = run(&["profile", "--m", "2", "--n", "64", "--out", &out_arg(&first)]);
    assert_eq!(code(&out), 0);
    // replaying the effective config reproduces the run
    let second = dir.path().join("second");
    let cfg = first.join("effective_config.toml");
    let out = run(&["profile", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&second)]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        std::fs::read(first.join("profile.csv")).unwrap(),
        std::fs::read(second.join("profile.csv")).unwrap()
    );

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[profile]\nmm = 2.0\n").unwrap();
    assert_eq!(code(&run(&["profile", "--config", bad.to_str().unwrap(), "--out", &out_arg(&second)])), 1);
    std::fs::write(&bad, "[profile\n").unwrap();
    assert_eq!(code(&run(&["profile", "--config", bad.to_str().unwrap(), "--out", &out_arg(&second)])), 1);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&run(&["profile", "--config", missing.to_str().unwrap(), "--out", &out_arg(&second)])), 1);

    // output directory taken from the document
    let third = dir.path().join("third");
    let good = dir.path().join("good.toml");
    std::fs::write(&good, format!("output_dir = {:?}\n[profile]\nm = 0.5\nn = 64\n", third.to_str().unwrap())).unwrap();
    assert_eq!(code(&run(&["profile", "--config", good.to_str().unwrap()])), 0);
    assert!((num(&third.join("params.toml"), "m") - 0.5).abs() < 1e-15);
}
