//! Binary-level contract tests: exit codes, stream discipline, JSON shape
//! and field order, environment override, and byte-identical determinism.

use serde_json::Value;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpl"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is exactly one JSON document")
}

#[test]
fn defects_report_has_the_stable_field_order() {
    let out = run(&["defects", "--q", "0.5", "--f", "defect:2", "--json"]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let v = stdout_json(&out);
    assert_eq!(v["version"], "0.1.0");
    assert_eq!(v["q"], 0.5);
    assert_eq!(v["command"], "defects");
    assert_eq!(v["inputs"], serde_json::json!(["defect:2"]));
    assert_eq!(v["defects"]["spots"], serde_json::json!([2]));
    assert!(v["defects"]["certificate"].as_f64().unwrap() < 0.5);
    let note = v["notes"][0].as_str().unwrap();
    assert!(note.starts_with("sign convention: product-factor vanishing"));

    // Serialized order is part of the schema contract. Probe keys with
    // their trailing colon so string values cannot shadow them.
    let pos = |key: &str| text.find(&format!("\"{key}\":")).expect(key);
    assert!(pos("version") < pos("q"));
    assert!(pos("q") < pos("command"));
    assert!(pos("command") < pos("inputs"));
    assert!(pos("inputs") < pos("policy"));
    assert!(pos("policy") < pos("defects"));
    assert!(pos("defects") < pos("notes"));
}

#[test]
fn gauge_standard_classifies_and_reports_evidence() {
    let v = stdout_json(&run(&["gauge-standard", "--q", "0.5", "--f", "poly:0,1", "--json"]));
    assert_eq!(v["gauge"]["verdict"], "standard");
    assert_eq!(v["gauge"]["invertible"], true);
    assert!(v["gauge"]["residual"].as_f64().unwrap() <= 1e-8);
    assert!(v["gauge"]["limit"].as_f64().unwrap() > 0.19);
    assert_eq!(v["gauge"]["obstruction_index"], Value::Null);

    let v = stdout_json(&run(&["gauge-standard", "--q", "0.5", "--f", "defect:1", "--json"]));
    assert_eq!(v["gauge"]["verdict"], "non_standard");
    assert_eq!(v["gauge"]["invertible"], false);
    assert_eq!(v["gauge"]["spots"], serde_json::json!([1]));
}

#[test]
fn gauge_between_reports_the_obstruction_side() {
    let v = stdout_json(&run(&[
        "gauge-between", "--q", "0.5", "--f", "defect:2", "--h", "defect:5", "--json",
    ]));
    assert_eq!(v["gauge"]["verdict"], "obstructed");
    assert_eq!(v["gauge"]["obstruction_index"], 2);
    assert_eq!(v["gauge"]["obstruction_side"], "source");
    assert_eq!(v["gauge"]["spots"], serde_json::json!([2]));
    assert_eq!(v["gauge"]["target_spots"], serde_json::json!([5]));
    assert_eq!(v["gauge"]["residual"], Value::Null);

    let v = stdout_json(&run(&[
        "gauge-between", "--q", "0.5", "--f", "defect:2", "--h", "defect:2", "--json",
    ]));
    assert_eq!(v["gauge"]["verdict"], "solved");
    assert_eq!(v["gauge"]["invertible"], true);
}

#[test]
fn verify_rep_reports_the_residual_table() {
    let v = stdout_json(&run(&["verify-rep", "--q", "0.9", "--dim", "32", "--json"]));
    let rc = &v["rep_check"];
    for key in [
        "b_minus_b_zero",
        "b_plus_b_zero",
        "b_minus_b_plus",
        "b_plus_b_minus",
        "adjoint",
        "dilation",
        "random_dilation_probe",
    ] {
        assert!(
            rc[key].as_f64().unwrap() <= 1e-12,
            "{key}: {}",
            rc[key]
        );
    }
    let measured = rc["boundary_defect"].as_f64().unwrap();
    let predicted = rc["boundary_predicted"].as_f64().unwrap();
    assert!((measured - predicted).abs() <= 1e-15 * predicted);
    assert_eq!(v["policy"]["dim"], 32);
    assert_eq!(v["policy"]["seed"], 0);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "sections", "--q", "0.5", "--h", "defect:1", "--h", "defect:2", "--h", "defect:3",
        "--json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());

    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["family"]["dim_lower_bounds"], serde_json::json!([1, 2, 3]));
    assert_eq!(v["family"]["strictly_increasing"], true);
}

#[test]
fn seed_changes_only_the_probe_inputs_not_the_verdict() {
    let a = stdout_json(&run(&["verify-rep", "--q", "0.5", "--dim", "16", "--seed", "7", "--json"]));
    let b = stdout_json(&run(&["verify-rep", "--q", "0.5", "--dim", "16", "--seed", "7", "--json"]));
    assert_eq!(a, b);
    assert_eq!(a["policy"]["seed"], 7);
    assert!(a["rep_check"]["random_dilation_probe"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn env_var_overrides_the_scan_cap() {
    let out = run_env(
        &["defects", "--q", "0.5", "--f", "poly:0,1", "--json"],
        "QPL_N_CAP",
        "50",
    );
    let v = stdout_json(&out);
    assert_eq!(v["policy"]["n_cap"], 50);

    // A slow parameter is accepted only with a sufficiently raised cap.
    let refused = run(&["defects", "--q", "0.995", "--f", "poly:0,1"]);
    assert_eq!(refused.status.code(), Some(2));
    let accepted = run_env(
        &["defects", "--q", "0.995", "--f", "poly:0,1", "--json"],
        "QPL_N_CAP",
        "200000",
    );
    assert_eq!(accepted.status.code(), Some(0));

    let bad = run_env(&["defects", "--q", "0.5", "--f", "poly:0,1"], "QPL_N_CAP", "soon");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes_separate_parse_and_domain_failures() {
    // Parse failures: malformed grammar, degree cap, defect cap.
    for args in [
        vec!["defects", "--q", "0.5", "--f", "wibble:3"],
        vec!["defects", "--q", "0.5", "--f", "poly:1,2,"],
        vec!["defects", "--q", "0.5", "--f", "defect:101"],
        vec!["gauge-between", "--q", "0.5", "--f", "poly:0,1", "--h", "scale:2:(defect:1"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert!(out.stdout.is_empty(), "diagnostics belong on stderr: {args:?}");
        assert!(!out.stderr.is_empty());
    }
    let long = format!("poly:{}", vec!["1"; 70].join(","));
    let out = run(&["defects", "--q", "0.5", "--f", &long]);
    assert_eq!(out.status.code(), Some(3));

    // Domain failures: bad parameter, overflowing flow, truncation too small.
    for args in [
        vec!["defects", "--q", "0", "--f", "poly:0,1"],
        vec!["defects", "--q", "1.5", "--f", "poly:0,1"],
        vec!["gauge-standard", "--q", "0.5", "--f", "defect:80"],
        vec!["sections", "--q", "0.5", "--h", "defect:8", "--dim", "6"],
        vec!["verify-rep", "--q", "0.5", "--dim", "1"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "diagnostics belong on stderr: {args:?}");
        assert!(!out.stderr.is_empty());
    }

    // Raising --max-degree admits what the default refuses.
    let out = run(&["defects", "--q", "0.5", "--f", &long, "--max-degree", "80"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn help_and_version_exit_cleanly() {
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("gauge"));
    let version = run(&["--version"]);
    assert_eq!(version.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&version.stdout).contains("0.1.0"));
}

#[test]
fn human_mode_prints_the_same_verdicts() {
    let out = run(&["defects", "--q", "0.5", "--f", "defect:2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("spots: [2]"));
    assert!(text.contains("sign convention"));
    assert!(serde_json::from_str::<Value>(&text).is_err(), "human mode is not JSON");
}
