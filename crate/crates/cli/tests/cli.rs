//! Command-line interface contract: exit codes, schema, determinism, and
//! the environment seed override.

use std::path::Path;
use std::process::{Command, Output};

fn qkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkd"))
        .args(args)
        .env_remove("QKD_SEED")
        .output()
        .expect("binary runs")
}

fn qkd_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkd"))
        .args(args)
        .env_remove("QKD_SEED")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn clean_run_exits_zero_with_schema_keys() {
    let out = qkd(&[
        "run",
        "--protocol",
        "p2",
        "--rounds",
        "200",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let report: serde_json::Value = serde_json::from_str(&text).expect("valid json");
    let object = report.as_object().unwrap();
    let mut keys: Vec<&str> = object.keys().map(String::as_str).collect();
    keys.sort_unstable();
    let mut expected = vec![
        "protocol",
        "attack",
        "seed",
        "n_rounds",
        "check_fraction",
        "abort_threshold",
        "epsilon",
        "noise_p",
        "qber",
        "qber_oracle",
        "aborted",
        "key_len_sifted",
        "key_len_final",
        "counters",
        "efficiency_total",
        "efficiency_qubits",
        "final_key_hex",
        "toeplitz_seed_hex",
    ];
    // Textual order in the file is part of the format; the parsed map only
    // witnesses the key set.
    for key in &expected {
        assert!(text.contains(&format!("\"{key}\"")), "missing {key}");
    }
    let mut order = usize::MIN;
    for key in &expected {
        let pos = text.find(&format!("\"{key}\"")).unwrap();
        assert!(pos > order || *key == "protocol", "{key} out of order");
        order = pos;
    }
    expected.sort_unstable();
    assert_eq!(keys, expected);
    let counters = object["counters"].as_object().unwrap();
    let mut counter_keys: Vec<&str> = counters.keys().map(String::as_str).collect();
    counter_keys.sort_unstable();
    assert_eq!(counter_keys, vec!["b_s", "b_t", "q_t", "q_u"]);
    assert_eq!(report["qber"], 0.0);
}

#[test]
fn attacked_run_exits_two() {
    let out = qkd(&[
        "run",
        "--protocol",
        "p2",
        "--attack",
        "cnot",
        "--rounds",
        "2000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["aborted"], true);
    assert_eq!(report["key_len_final"], 0);
    assert_eq!(report["final_key_hex"], "");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qkd(&["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(qkd(&["run"]).status.code(), Some(1), "missing --protocol");
    assert_eq!(
        qkd(&["run", "--protocol", "p2", "--rounds", "5"]).status.code(),
        Some(1),
        "rounds below the minimum"
    );
    assert_eq!(
        qkd(&["run", "--protocol", "p2", "--attack", "bell"])
            .status
            .code(),
        Some(1),
        "unsupported protocol/attack pair"
    );
    assert_eq!(
        qkd(&["sweep", "--protocol", "p2"]).status.code(),
        Some(1),
        "sweep without a grid axis"
    );
}

#[test]
fn three_party_run_reports_equal_keys() {
    let out = qkd(&[
        "run",
        "--protocol",
        "p3",
        "--mode",
        "three-party",
        "--rounds",
        "600",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["protocol"], "p3-three-party");
    assert!(report["key_len_final"].as_u64().unwrap() > 0);
}

#[test]
fn identical_invocations_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("a.json");
    let path_b = dir.path().join("b.json");
    for path in [&path_a, &path_b] {
        let out = qkd(&[
            "run",
            "--protocol",
            "p1",
            "--rounds",
            "400",
            "--seed",
            "99",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&path_a).unwrap();
    let b = std::fs::read(&path_b).unwrap();
    assert_eq!(a, b, "same flags and seed must produce identical bytes");
}

#[test]
fn env_seed_overrides_flag() {
    let with_flag = qkd(&["run", "--protocol", "p2", "--rounds", "100", "--seed", "1"]);
    let with_env = qkd_with_env(
        &["run", "--protocol", "p2", "--rounds", "100", "--seed", "1"],
        "QKD_SEED",
        "2",
    );
    let flag_report: serde_json::Value = serde_json::from_str(&stdout(&with_flag)).unwrap();
    let env_report: serde_json::Value = serde_json::from_str(&stdout(&with_env)).unwrap();
    assert_eq!(flag_report["seed"], 1);
    assert_eq!(env_report["seed"], 2);
    assert_eq!(
        qkd_with_env(
            &["run", "--protocol", "p2", "--rounds", "100"],
            "QKD_SEED",
            "not-a-number",
        )
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn both_format_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.json");
    let out = qkd(&[
        "run",
        "--protocol",
        "p2",
        "--rounds",
        "60",
        "--check-fraction",
        "0.2",
        "--seed",
        "8",
        "--format",
        "both",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(path.exists());
    let trace = dir.path().join("session.trace.csv");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("round,state_tag,"));
    assert_eq!(lines.count(), 60);
}

#[test]
fn verify_identities_has_ten_entries_and_exits_zero() {
    let out = qkd(&["verify-identities"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["all_pass"], true);
    assert_eq!(report["identities"].as_array().unwrap().len(), 10);
}

#[test]
fn demo_han_prints_contrast_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demo.json");
    let out = qkd(&[
        "demo-han",
        "--rounds",
        "2000",
        "--seed",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("legacy three-photon"));
    assert!(text.contains("controller triplets"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["han"]["guess_accuracy"], 1.0);
    assert_eq!(report["han"]["detection_events"], 0);
}

#[test]
fn demo_han_single_round_is_valid() {
    let out = qkd(&["demo-han", "--rounds", "1", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sweep_noise_grid_shows_monotone_qber() {
    let out = qkd(&[
        "sweep",
        "--protocol",
        "p2",
        "--rounds",
        "400",
        "--runs-per-cell",
        "4",
        "--abort-threshold",
        "0.9",
        "--grid-noise-p",
        "0,0.02,0.05",
        "--seed",
        "17",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut qbers = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        qbers.push(fields[9].parse::<f64>().unwrap());
    }
    assert_eq!(qbers.len(), 3);
    assert!(qbers[0] < qbers[1] && qbers[1] < qbers[2]);
}

#[test]
fn sweep_attack_grid_reproduces_reference_rates() {
    let out = qkd(&[
        "sweep",
        "--protocol",
        "p2",
        "--rounds",
        "2000",
        "--runs-per-cell",
        "5",
        "--abort-threshold",
        "0.9",
        "--grid-attack",
        "none,intercept-resend,cnot",
        "--seed",
        "29",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut oracle_column = Vec::new();
    let mut pooled_column = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        pooled_column.push(fields[9].parse::<f64>().unwrap());
        oracle_column.push(fields[12].parse::<f64>().unwrap());
    }
    assert_eq!(oracle_column.len(), 3);
    assert!((oracle_column[0] - 0.0).abs() < 1e-12);
    assert!((oracle_column[1] - 0.375).abs() < 1e-12);
    assert!((oracle_column[2] - 0.25).abs() < 1e-12);
    for (pooled, oracle) in pooled_column.iter().zip(&oracle_column) {
        assert!((pooled - oracle).abs() < 0.05, "{pooled} vs {oracle}");
    }
}

#[test]
fn sweep_is_deterministic_given_base_seed() {
    let args = [
        "sweep",
        "--protocol",
        "p2",
        "--rounds",
        "200",
        "--runs-per-cell",
        "3",
        "--grid-attack",
        "none,cnot",
        "--abort-threshold",
        "0.9",
        "--seed",
        "21",
    ];
    let a = stdout(&qkd(&args));
    let b = stdout(&qkd(&args));
    assert_eq!(a, b);
}

#[test]
fn trace_csv_format_direct() {
    let dir = tempfile::tempdir().unwrap();
    let path: &Path = &dir.path().join("trace.csv");
    let out = qkd(&[
        "run",
        "--protocol",
        "p3",
        "--rounds",
        "50",
        "--check-fraction",
        "0.25",
        "--seed",
        "13",
        "--format",
        "csv-trace",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(path).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "round,state_tag,alice_basis,bob_basis,charlie_basis,a_bit,b_bit,c_bit,hadamard_flags,check,error"
    );
    // Two batches of 50 rounds each.
    assert_eq!(text.lines().count(), 1 + 100);
}
