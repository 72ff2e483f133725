use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_secure-pac"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn config_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

fn eta_c_from(line: &str) -> f64 {
    line.rsplit('=').next().unwrap().trim().parse().unwrap()
}

#[test]
fn threshold_standard_to_stdout() {
    let out = run(&["threshold"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eta,legit_info,eve_chi,gap,admissible"));
    assert_eq!(lines.count(), 500);
    let err = stderr(&out);
    assert!(err.contains("eta_c (standard)"));
    assert!((eta_c_from(err.trim()) - 0.110028).abs() < 1e-5);
}

#[test]
fn threshold_corrected_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = run(&[
        "threshold",
        "--variant",
        "corrected",
        "--grid-step",
        "0.01",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let printed = String::from_utf8(out.stdout).unwrap();
    assert!((eta_c_from(printed.trim()) - 0.204).abs() < 5e-3);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn threshold_rejects_bad_step() {
    assert_eq!(
        run(&["threshold", "--grid-step", "0.2"]).status.code(),
        Some(4)
    );
    assert_eq!(
        run(&["threshold", "--variant", "literal"]).status.code(),
        Some(4)
    );
}

#[test]
fn plan_default_numbers() {
    let out = run(&["plan"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["plan"]["m_train"], 2353);
    assert_eq!(v["plan"]["m_cert"], 1245);
    assert_eq!(v["plan"]["m_total"], 3598);
    assert_eq!(v["plan"]["m_raw"], 7196);
    assert_eq!(v["m_h_min"], 15);
    assert_eq!(v["feasibility"]["feasible"], true);
    assert!((v["alpha_star"].as_f64().unwrap() - 0.496_374).abs() < 1e-6);
    let slack =
        v["optimized"]["m_total"].as_f64().unwrap() - v["continuous_optimum"].as_f64().unwrap();
    assert!(slack.abs() <= 17.0);
}

#[test]
fn plan_trivial_confidence() {
    let out = run(&["plan", "--delta-star", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["m_h_min"], 1);
    assert!(v["plan"]["m_total"].as_u64().unwrap() < 3598);
}

#[test]
fn plan_infeasible_run_length() {
    let out = run(&["plan", "--m-h", "14"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("margin"), "{err}");
    assert!(err.contains("minimal run length 15"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn plan_sweep_csv() {
    let out = run(&["plan", "--sweep-alpha", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "alpha,m_train,n_cert_blocks,m_cert,m_total,m_raw,continuous_budget"
    );
    assert_eq!(lines.len(), 10);
    assert!(lines[5].starts_with("0.5,2353,83,1245,3598,7196,"));
}

#[test]
fn config_precedence() {
    let f = config_file(r#"{"m_h": 20, "delta_star": 0.1, "seed": 5}"#);
    let path = f.path().to_str().unwrap();
    let v = json(&run(&["plan", "--config", path]));
    assert_eq!(v["design"]["m_h"], 20);
    assert_eq!(v["design"]["delta_star"], 0.1);
    assert_eq!(v["design"]["epsilon_star"], 0.1);
    let v = json(&run(&["plan", "--config", path, "--m-h", "16"]));
    assert_eq!(v["design"]["m_h"], 16);
}

#[test]
fn config_errors_are_input_errors() {
    let f = config_file(r#"{"epsilon": 0.1}"#);
    let out = run(&["plan", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("epsilon"));

    let f = config_file(r#"{"kappa": 1.5}"#);
    let out = run(&["plan", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("`kappa`"), "{}", stderr(&out));

    let out = run(&["plan", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(run(&["plan", "--no-such-flag"]).status.code(), Some(4));
}

#[test]
fn simulate_happy_path_accepts() {
    let out = run(&["simulate", "--xi", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let r = &v["report"];
    assert_eq!(r["accepted"], true);
    assert_eq!(r["evidence"]["source"], "empirical");
    assert_eq!(r["evidence"]["replicas"], 2000);
    assert!(r["p_l_used"].as_f64().unwrap() >= 0.95);
}

#[test]
fn simulate_default_baseline_blocks() {
    let out = run(&["simulate", "--replicas", "300"]);
    assert_eq!(out.status.code(), Some(2));
    let r = &json(&out)["report"];
    assert_eq!(r["gate_baseline"], false);
    assert!(r["p_l_used"].as_f64().unwrap() <= r["p_prl"].as_f64().unwrap());
}

#[test]
fn simulate_full_intercept_rejected() {
    let out = run(&[
        "simulate",
        "--eavesdrop-fraction",
        "1",
        "--replicas",
        "100",
        "--xi",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert!((v["measured_eta"].as_f64().unwrap() - 0.25).abs() < 0.02);
    assert_eq!(v["report"]["gate_admissibility"], false);
    assert_eq!(v["channel"]["kind"], "bb84");
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--replicas",
        "300",
        "--seed",
        "99",
        "--intrinsic-flip",
        "0.02",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
    let c = run(&[
        "simulate",
        "--replicas",
        "300",
        "--seed",
        "100",
        "--intrinsic-flip",
        "0.02",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_csv_report() {
    let out = run(&["simulate", "--replicas", "50", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("field,value\n"));
    assert!(text.contains("\nreport.accepted,"));
}

#[test]
fn decide_routes() {
    let out = run(&["decide", "--p-l", "0.99", "--xi", "1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["evidence"]["source"], "analytic");

    let out = run(&[
        "decide",
        "--p-l",
        "0.99",
        "--xi",
        "1e-3",
        "--measured-eta",
        "0.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let r = &json(&out)["report"];
    assert_eq!(r["gate_admissibility"], false);
    assert_eq!(r["gate_reliability"], true);

    let out = run(&[
        "decide",
        "--successes",
        "1990",
        "--replicas",
        "2000",
        "--xi",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["evidence"]["successes"], 1990);

    let out = run(&["decide"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["report"]["gate_baseline"], false);
}

#[test]
fn halting_outputs() {
    let v = json(&run(&[
        "halting", "--q", "0.6", "--m-h", "3", "--m-cert", "40",
    ]));
    assert!((v["mean_trials"].as_f64().unwrap() - 9.074_074).abs() < 1e-5);
    assert!(v["exact"].as_f64().unwrap() >= v["block_bound"].as_f64().unwrap());

    let out = run(&[
        "halting", "--q", "0.5", "--m-h", "2", "--m-cert", "4", "--trace",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "t,halting_prob\n0,0\n1,0\n2,0.25\n3,0.375\n4,0.5\n");

    let v = json(&run(&["halting"]));
    assert_eq!(v["m_cert"], 1245);
    assert_eq!(v["m_h"], 15);
}

#[test]
fn qber_measurement() {
    let v = json(&run(&[
        "qber",
        "--intrinsic-flip",
        "0.05",
        "--eavesdrop-fraction",
        "0.4",
    ]));
    assert!((v["expected_qber"].as_f64().unwrap() - 0.14).abs() < 1e-12);
    assert!((v["sift_fraction"].as_f64().unwrap() - 0.5).abs() < 0.01);
    assert!((v["qber"].as_f64().unwrap() - 0.14).abs() < 0.02);
    assert_eq!(v["admissible"], false);
}
