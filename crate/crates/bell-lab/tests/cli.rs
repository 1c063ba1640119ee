//! End-to-end tests of the command-line interface: output schema, exit
//! codes, config merging, input-file round trips and reproducibility.

use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bell-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn qm_ideal_table_matches_closed_forms() {
    let out = run(&["qm", "--ideal", "--angles", "0,30,90"]);
    let v = stdout_json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    // aligned polarizers: same-channel correlation only
    assert!((rows[0]["pp"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((rows[0]["pm"].as_f64().unwrap()).abs() < 1e-12);
    assert!((rows[0]["e"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // E = cos 2θ
    assert!((rows[1]["e"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((rows[2]["e"].as_f64().unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn qm_real_table_scales_with_efficiency() {
    let out = run(&["qm", "--eta", "0.5", "--phi-deg", "15", "--angles", "0"]);
    let v = stdout_json(&out);
    let row = &v["rows"][0];
    // singles are transmittance-independent: ηΩ/8π per channel
    let omega = 2.0 * std::f64::consts::PI * (1.0 - (15f64).to_radians().cos());
    let expected = 0.5 * omega / (8.0 * std::f64::consts::PI);
    assert!((row["p_plus"].as_f64().unwrap() - expected).abs() < 1e-15);
    assert_eq!(v["meta"]["eta"].as_f64().unwrap(), 0.5);
}

#[test]
fn evaluate_ideal_reaches_three_halves() {
    let out = run(&[
        "evaluate",
        "--inequality",
        "ardehali-ideal",
        "--from-qm",
        "--ideal",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["inequality"], "ardehali-ideal");
    assert!((v["lhs"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(v["bound"].as_f64().unwrap(), 1.0);
    assert!((v["violation_factor"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let labels: Vec<_> = v["settings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["label"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(labels, ["a", "b", "ap", "bp"]);
}

#[test]
fn evaluate_strong_real_apparatus() {
    let out = run(&[
        "evaluate",
        "--inequality",
        "ardehali-strong",
        "--from-qm",
        "--eta",
        "0.5",
        "--phi-deg",
        "15",
    ]);
    let v = stdout_json(&out);
    assert!((v["lhs"].as_f64().unwrap() - 1.5).abs() < 1e-10);
    assert_eq!(v["meta"]["eta"].as_f64().unwrap(), 0.5);
    assert_eq!(v["meta"]["phi_deg"].as_f64().unwrap(), 15.0);
}

#[test]
fn evaluate_report_round_trips_through_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let first = run(&[
        "evaluate",
        "--inequality",
        "ardehali-strong",
        "--from-qm",
        "--eta",
        "0.9",
        "--phi-deg",
        "30",
    ]);
    let v = stdout_json(&first);
    std::fs::write(&path, &first.stdout).unwrap();

    let second = run(&[
        "evaluate",
        "--inequality",
        "ardehali-strong",
        "--input",
        path.to_str().unwrap(),
    ]);
    let w = stdout_json(&second);
    assert!((v["lhs"].as_f64().unwrap() - w["lhs"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"eta": 0.5, "phi-deg": 15}"#).unwrap();
    let cfg = path.to_str().unwrap();

    let from_config = run(&[
        "evaluate",
        "--inequality",
        "ardehali-strong",
        "--from-qm",
        "--config",
        cfg,
    ]);
    let v = stdout_json(&from_config);
    assert_eq!(v["meta"]["eta"].as_f64().unwrap(), 0.5);

    let overridden = run(&[
        "evaluate",
        "--inequality",
        "ardehali-strong",
        "--from-qm",
        "--config",
        cfg,
        "--eta",
        "0.3",
    ]);
    let w = stdout_json(&overridden);
    assert_eq!(w["meta"]["eta"].as_f64().unwrap(), 0.3);
    assert_eq!(w["meta"]["phi_deg"].as_f64().unwrap(), 15.0);
}

#[test]
fn verify_theorem_reports_pass() {
    let out = run(&[
        "verify-theorem",
        "--u",
        "2",
        "--v",
        "3",
        "--samples",
        "100000",
        "--seed",
        "7",
    ]);
    let v = stdout_json(&out);
    assert!(v["passed"].as_bool().unwrap());
    assert!(v["max_z_vertex"].as_f64().unwrap() <= v["tolerance"].as_f64().unwrap());
    assert!(v["max_z_sampled"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn lhv_summary_has_error_bars_and_checks() {
    let out = run(&[
        "lhv", "--model", "noise", "--d", "0.2", "--shots", "50000", "--seed", "11",
    ]);
    let v = stdout_json(&out);
    assert!(v["within_bound"].as_bool().unwrap());
    assert!(v["sigma"].as_f64().unwrap() > 0.0);
    assert!(v["supplementary"]["passed"].as_bool().unwrap());
    assert!(v["channel_sum_equality"]["passed"].as_bool().unwrap());
    assert_eq!(v["meta"]["seed"].as_u64().unwrap(), 11);
}

#[test]
fn optimize_writes_curve_and_finds_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = run(&[
        "optimize",
        "--inequality",
        "ardehali-strong",
        "--source",
        "ideal",
        "--out",
        path.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert!((v["best_t_deg"].as_f64().unwrap() - 30.0).abs() < 0.01);
    assert!((v["best_lhs"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    let curve = std::fs::read_to_string(&path).unwrap();
    assert!(curve.starts_with("t_deg,lhs\n"));
    assert!(curve.lines().count() > 10);
}

#[test]
fn csv_format_emits_flat_rows() {
    let out = run(&[
        "evaluate",
        "--inequality",
        "chsh",
        "--from-qm",
        "--ideal",
        "--angles",
        "45,67.5,0,22.5",
        "--format",
        "csv",
    ]);
    assert!(output_text(&out).starts_with("inequality,lhs,bound,violation_factor\n"));
    let line = output_text(&out).lines().nth(1).unwrap().to_string();
    let lhs: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((lhs - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
}

fn output_text(out: &Output) -> String {
    assert!(out.status.success());
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exit_codes_follow_the_taxonomy() {
    // 2: usage — evaluate without a probability source
    let out = run(&["evaluate", "--inequality", "chsh"]);
    assert_eq!(out.status.code(), Some(2));

    // 2: usage — unknown model
    let out = run(&["lhv", "--model", "nosuch"]);
    assert_eq!(out.status.code(), Some(2));

    // 2: usage — malformed flag value (handled by the parser)
    let out = run(&["qm", "--eta", "lots"]);
    assert_eq!(out.status.code(), Some(2));

    // 3: degenerate denominator in a ratio-form inequality
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch.json");
    std::fs::write(
        &path,
        r#"{"inputs": {"p_phi": 0.2, "p_3phi": 0.05, "p_ap_inf": 0.25, "p_inf_b": 0.25, "p_inf_inf": 0.0}}"#,
    )
    .unwrap();
    let out = run(&["evaluate", "--inequality", "ch", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "lhv",
        "--model",
        "malus-product",
        "--d",
        "0.5",
        "--shots",
        "100000",
        "--seed",
        "42",
        "--t-deg",
        "30",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let args = ["verify-theorem", "--samples", "200000", "--seed", "5"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}
