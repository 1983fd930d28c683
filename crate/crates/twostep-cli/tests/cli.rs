//! End-to-end checks of the CLI surface: argument handling, file formats
//! and the custom-problem JSON loader.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twostep"))
        .args(args)
        .output()
        .expect("spawn CLI")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("twostep-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn quadrature_prints_simpson_rule_as_json() {
    let out = run(&["quadrature", "--family", "lobatto", "--k", "3"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["family"], "lobatto");
    assert_eq!(doc["k"], 3);
    assert_eq!(doc["degree_of_precision"], 3);
    let nodes: Vec<f64> = doc["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(nodes, vec![0.0, 0.5, 1.0]);
    let weights: Vec<f64> = doc["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((weights[0] - 1.0 / 6.0).abs() < 1e-15);
    assert!((weights[1] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn integrate_writes_csv_records() {
    let out_file = tmp("integrate.csv");
    let out = run(&[
        "integrate",
        "--problem",
        "pendulum3",
        "--method",
        "mk",
        "--nodes",
        "lobatto",
        "--k",
        "5",
        "--h",
        "0.5",
        "--t-end",
        "10",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_file).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,y0,y1,energy_error,residual,fp_iterations"
    );
    assert_eq!(lines.count(), 21); // y0 plus 20 steps
    assert!(!text.contains('\r'));
}

#[test]
fn integrate_json_format_parses_back() {
    let out_file = tmp("integrate.json");
    let out = run(&[
        "integrate",
        "--problem",
        "sho",
        "--method",
        "trap",
        "--nodes",
        "lobatto",
        "--k",
        "2",
        "--h",
        "0.25",
        "--t-end",
        "2",
        "--format",
        "json",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(doc["problem"], "sho");
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 9);
    assert_eq!(records[0]["y"].as_array().unwrap().len(), 2);
    assert!(records[8]["energy_error"].as_f64().unwrap().abs() < 1e-3);
}

#[test]
fn drift_emits_long_format_series() {
    let out_file = tmp("drift.csv");
    let out = run(&[
        "drift",
        "--problem",
        "pendulum3",
        "--configs",
        "mk:lobatto:5,mk-lin:lobatto:5",
        "--h",
        "0.5",
        "--t-end",
        "10",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_file).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "config,t,abs_h_error");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 21);
    assert!(rows[0].starts_with("mk:lobatto:5,"));
    assert!(rows[21].starts_with("mk-lin:lobatto:5,"));
}

#[test]
fn converge_rejects_non_integral_grids() {
    let out = run(&[
        "converge",
        "--problem",
        "pendulum3",
        "--method",
        "mk",
        "--nodes",
        "lobatto",
        "--k",
        "5",
        "--h-list",
        "0.3",
        "--t-end",
        "10",
        "--out",
        tmp("never.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("integer multiple"), "stderr: {stderr}");
}

#[test]
fn unknown_problem_is_a_clean_error() {
    let out = run(&[
        "integrate",
        "--problem",
        "lorenz",
        "--method",
        "mk",
        "--nodes",
        "lobatto",
        "--k",
        "5",
        "--h",
        "0.5",
        "--t-end",
        "10",
        "--out",
        tmp("never2.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("neither a built-in problem"),
        "stderr: {stderr}"
    );
}

#[test]
fn custom_polynomial_problem_from_json() {
    // quartic oscillator H = p^2/2 + q^4/4 started at (0, 1)
    let problem_file = tmp("quartic.json");
    std::fs::write(
        &problem_file,
        r#"{
            "name": "quartic",
            "dof": 1,
            "terms": [
                {"coefficient": 0.5, "exponents": [0, 2]},
                {"coefficient": 0.25, "exponents": [4, 0]}
            ],
            "y0": [0.0, 1.0]
        }"#,
    )
    .unwrap();
    let out_file = tmp("quartic.csv");
    let out = run(&[
        "integrate",
        "--problem",
        problem_file.to_str().unwrap(),
        "--method",
        "mk",
        "--nodes",
        "lobatto",
        "--k",
        "5",
        "--h",
        "0.25",
        "--t-end",
        "10",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // degree 4 with d = 2k-3 = 7 >= 2*4-1: energy must be conserved
    let stderr = String::from_utf8_lossy(&out.stderr);
    let reported = stderr
        .split("max |H - H0| = ")
        .nth(1)
        .and_then(|s| s.trim().parse::<f64>().ok())
        .unwrap_or_else(|| panic!("no summary in: {stderr}"));
    assert!(reported < 1e-13, "quartic energy drift {reported}");
    assert!(Path::new(&out_file).exists());
}
