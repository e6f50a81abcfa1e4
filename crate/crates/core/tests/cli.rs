use std::path::Path;
use std::process::{Command, Output};

fn turnpike(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_turnpike"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn data_rows(csv: &str) -> usize {
    csv.lines().filter(|l| !l.starts_with('#')).count() - 1
}

const CHAIN: &str = r#"{"omega": [1, 2, 3, 4], "b": [1, 0.5, 0.333, 0.25],
  "xbar_xi": 0.1, "xbar_eta": 0, "ubar": 1, "T": 8, "x0_xi": 1, "samples": 801,
  "n_list": [2, 4], "t_list": [6, 12], "tolerances": {"envelope_spread": 4}}"#;

#[test]
fn beam_table_has_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = turnpike(dir.path(), &["beam", "--n-max", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(dir.path(), "out/modes.csv");
    assert!(csv.starts_with("# config_sha256="));
    assert!(csv.contains("n,delta,gamma,omega,b,norm_const"));
    assert_eq!(data_rows(&csv), 200);
}

#[test]
fn spectrum_json_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = turnpike(dir.path(), &["spectrum", "--n", "50", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["residual_max"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["N"], 50);
    let csv = read(dir.path(), "out/spectrum.csv");
    assert_eq!(data_rows(&csv), 50);
    for line in csv.lines().skip(2) {
        let cert = line.split(',').nth(7).unwrap();
        assert!(["pass", "fail", "n/a"].contains(&cert), "{line}");
    }
}

#[test]
fn zero_gain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"omega": [1, 2], "b": [1, 0]}"#);
    let out = turnpike(dir.path(), &["--config", &cfg, "spectrum"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("A1"));
}

#[test]
fn missing_target_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"N": 10, "xbar_xi": 0, "ubar": 1}"#);
    let out = turnpike(dir.path(), &["--config", &cfg, "turnpike"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("xbar_eta"));
    let missing_file = turnpike(dir.path(), &["--config", "nope.json", "static"]);
    assert_eq!(missing_file.status.code(), Some(1));
}

#[test]
fn static_zero_target_prints_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"N": 5, "xbar_xi": 0, "xbar_eta": 0, "ubar": 0}"#,
    );
    let out = turnpike(dir.path(), &["--config", &cfg, "static"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!(
            row.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0),
            "{row}"
        );
    }
}

#[test]
fn solve_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CHAIN);
    let out = turnpike(
        dir.path(),
        &["--config", &cfg, "--json", "solve", "--oracle", "--directions", "3"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["oracle_relative_difference"].as_f64().unwrap() < 1e-6);
    assert!(v["pmp_residual"].as_f64().unwrap() < 1e-6);
    assert!(v["stationarity_max_abs_linear"].as_f64().unwrap() < 1e-6);
    assert_eq!(data_rows(&read(dir.path(), "out/trajectory.csv")), 801);
}

#[test]
fn turnpike_sweep_reports_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CHAIN);
    let out = turnpike(
        dir.path(),
        &[
            "--config", &cfg, "--json", "turnpike", "--beta", "0.4", "--window", "2:5",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    assert!(runs.iter().all(|r| r["fitted_exponent"].as_f64().is_some()));
    assert_eq!(v["passed"], true);
    let prof = read(dir.path(), "out/profiles/profile_N4_T12_beta0.4_loglog.csv");
    assert!(prof.contains("log_t1,log_dev"));
    assert_eq!(data_rows(&read(dir.path(), "out/sweep.csv")), 4);
}

#[test]
fn failed_threshold_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let strict = CHAIN.replace("\"envelope_spread\": 4", "\"envelope_spread\": 1.0");
    assert_ne!(strict, CHAIN);
    let cfg = write(dir.path(), "c.json", &strict);
    let out = turnpike(dir.path(), &["--config", &cfg, "turnpike"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_prints_verdict_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = turnpike(dir.path(), &["check", "--n", "64", "--rho", "1.4", "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for a in ["A1", "A2", "A3", "A4", "A5", "A6"] {
        assert!(text.lines().any(|l| l.starts_with(a)), "{a} missing:\n{text}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CHAIN);
    for (out, jobs) in [("a", "1"), ("b", "3")] {
        let o = turnpike(
            dir.path(),
            &["--config", &cfg, "--out", out, "--jobs", jobs, "turnpike"],
        );
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["sweep.csv", "sweep.json", "profiles/profile_N2_T6_beta0.4.csv"] {
        assert_eq!(
            read(dir.path(), &format!("a/{f}")),
            read(dir.path(), &format!("b/{f}")),
            "{f}"
        );
    }
}
