use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logistic-dde")).args(args).output().unwrap()
}

fn rows(csv: &[u8]) -> Vec<Vec<f64>> {
    String::from_utf8_lossy(csv)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| if v.is_empty() { f64::NAN } else { v.parse().unwrap() }).collect())
        .collect()
}

#[test]
fn simulate_blowup_seed_reports_quarter() {
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("run.json");
    let out = bin(&[
        "simulate", "--r", "1", "--alpha", "1", "--history", "stepramp:q=4", "--t-end", "1",
        "--meta", meta.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
    assert_eq!(side["status"], "blown_up");
    assert!((side["t_blowup"].as_f64().unwrap() - 0.25).abs() < 1e-6);
    let data = rows(&out.stdout);
    assert!(data.iter().all(|r| r[0] < 0.25 + 1e-9 && r[1] > 0.0));
}

#[test]
fn simulate_exponential_solution() {
    let out = bin(&["simulate", "--r", "1", "--alpha", "0.367879441", "--history", "exp:c=1", "--t-end", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let data = rows(&out.stdout);
    let last = data.last().unwrap();
    assert_eq!(last[0], 5.0);
    assert!((last[1] / 5f64.exp() - 1.0).abs() < 1e-8, "{}", last[1]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("taken as exp(-r)"));
}

#[test]
fn simulate_alpha_exp_adds_z_column() {
    let out = bin(&["simulate", "--r", "2", "--alpha-exp", "--history", "exp:c=3", "--t-end", "2", "--dt-out", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("t,x,z\n"));
    for r in rows(&out.stdout) {
        assert!(r[2].abs() < 1e-12);
    }
}

#[test]
fn simulate_equilibrium_column() {
    let out = bin(&["simulate", "--r", "1", "--alpha", "0", "--history", "const:v=1", "--t-end", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let data = rows(&out.stdout);
    assert_eq!(data.len(), 1001);
    assert!(data.iter().all(|r| r[1] == 1.0));
}

#[test]
fn simulate_writes_files_and_sidecar_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = bin(&[
        "simulate", "--r", "1", "--alpha", "-0.5", "--history", "const:v=2", "--t-end", "3",
        "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("t,x\n"));
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.csv.json")).unwrap()).unwrap();
    assert_eq!(side["status"], "completed");
}

#[test]
fn simulate_abort_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("m.json");
    let out = bin(&[
        "simulate", "--r", "1", "--alpha", "-0.5", "--history", "const:v=2", "--t-end", "100",
        "--max-steps", "5", "--meta", meta.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
    assert_eq!(side["status"], "aborted");
    assert!(side["reason"].is_string());
    assert!(side["t_covered"].as_f64().unwrap() < 100.0);
}

#[test]
fn bad_history_names_token() {
    let out = bin(&["simulate", "--r", "1", "--alpha", "0", "--history", "thm2:c=1,delt=0.5", "--t-end", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`delt`"));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_flag_rejected() {
    let out = bin(&["classify", "--r", "1", "--alpha", "0", "--beta", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn classify_examples() {
    let get = |alpha: &str, r: &str| -> Value {
        let out = bin(&["classify", "--alpha", alpha, "--r", r]);
        assert_eq!(out.status.code(), Some(0));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    assert_eq!(get("-2", "5")["globally_stable"], true);
    let v = get("0.5", "3");
    assert_eq!(v["locally_stable"], "unstable");
    assert_eq!(v["blowup_exists"], true);
    assert_eq!(get("1", "1")["equilibrium_exists"], false);
    assert_eq!(get("-5e-1", "1e0")["locally_stable"], "stable");
}

#[test]
fn boundary_chart_rows() {
    let out = bin(&["boundary", "--alpha-min", "-0.5", "--alpha-max", "0.5", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("alpha,r_boundary,exp_solution_r\n"));
    let data = rows(&out.stdout);
    let expect = [(-0.5, 3.6276), (0.0, std::f64::consts::FRAC_PI_2), (0.5, 0.6046)];
    for (row, (alpha, r)) in data.iter().zip(expect) {
        assert_eq!(row[0], alpha);
        assert!((row[1] - r).abs() < 1e-4);
    }
    assert!(data[0][2].is_nan());
    assert!((data[2][2] - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn boundary_range_outside_unit_interval() {
    let out = bin(&["boundary", "--alpha-min", "-1", "--alpha-max", "0.5", "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_suites() {
    let out = bin(&["verify", "--suite", "exponential"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["suite"], "exponential");
    assert_eq!(rep["overall_pass"], true);

    assert_eq!(bin(&["verify", "--suite", "nosuch"]).status.code(), Some(1));
}

#[test]
fn verify_all_is_deterministic() {
    let a = bin(&["verify", "--suite", "all", "--seed", "42"]);
    let b = bin(&["verify", "--suite", "all", "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let reps: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(reps.as_array().unwrap().len(), 5);
}

#[test]
fn config_file_fills_missing_flags_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.cfg");
    std::fs::write(&cfg, "r = 3\nalpha = 0.5\n").unwrap();
    let out = bin(&["classify", "--config", cfg.to_str().unwrap(), "--alpha", "-2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["r"], 3.0);
    assert_eq!(v["alpha"], -2.0);
}
