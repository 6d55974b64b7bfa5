//! End-to-end checks of the binary surface: config handling, report
//! round-trips, tamper detection and the exit-code taxonomy.

use std::path::Path;
use std::process::Command;

use lethargy_cli::{load_config, run_scenario, verify_report, write_csv, write_report};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lethargy"))
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const EXACT_CFG: &str = r#"{
    "norm": "L2",
    "ambient_dim": 8,
    "chain": {"dims": [1, 2, 3, 4]},
    "sequence": {"kind": "geometric", "scale": 1.0, "ratio": 0.5},
    "mode": "exact"
}"#;

#[test]
fn run_verify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "exact.json", EXACT_CFG);
    let report_path = dir.path().join("exact.report.json");
    let csv_path = dir.path().join("exact.csv");

    let status = bin()
        .args(["run", cfg_path.to_str().unwrap()])
        .arg("--out")
        .arg(&report_path)
        .arg("--emit-csv")
        .arg(&csv_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("n,d_n,rho,cert_lower,cert_upper,ratio,pass\n"));
    assert_eq!(csv.lines().count(), 5);

    let status = bin()
        .args(["verify", report_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn tampered_report_detected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "exact.json", EXACT_CFG);
    let cfg = load_config(&cfg_path).unwrap();
    let mut report = run_scenario(&cfg).unwrap();
    report.rows[1].rho += 1e-3;
    let report_path = dir.path().join("tampered.report.json");
    write_report(&report, &report_path).unwrap();
    let status = bin()
        .args(["verify", report_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn report_missing_point_is_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "exact.json", EXACT_CFG);
    let cfg = load_config(&cfg_path).unwrap();
    let mut report = run_scenario(&cfg).unwrap();
    report.point = None;
    assert!(matches!(
        verify_report(&report),
        Err(lethargy_cli::CliError::Schema { .. })
    ));
}

#[test]
fn config_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_cfg(dir.path(), "bad.json", "{ not json");
    let status = bin().args(["run", bad.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(3));

    let missing_c = write_cfg(
        dir.path(),
        "noc.json",
        &EXACT_CFG.replace("\"mode\": \"exact\"", "\"mode\": \"konyagin\""),
    );
    let status = bin()
        .args(["run", missing_c.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn infeasible_input_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "power.json",
        &EXACT_CFG.replace(
            r#"{"kind": "geometric", "scale": 1.0, "ratio": 0.5}"#,
            r#"{"kind": "power", "p": 2.0}"#,
        ),
    );
    let status = bin().args(["run", cfg.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn deterministic_csv_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "exact.json", EXACT_CFG);
    let cfg = load_config(&cfg_path).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_csv(&run_scenario(&cfg).unwrap(), &a).unwrap();
    write_csv(&run_scenario(&cfg).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn probe_subcommand_forces_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), "exact.json", EXACT_CFG);
    let out = dir.path().join("probe.report.json");
    let status = bin()
        .args(["probe", cfg_path.to_str().unwrap()])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = lethargy_cli::load_report(&out).unwrap();
    assert!(report.findings.is_some());
    assert!(report.rows.is_empty());
}

#[test]
fn batch_continues_past_failures() {
    let dir = tempfile::tempdir().unwrap();
    write_cfg(dir.path(), "a_good.json", EXACT_CFG);
    write_cfg(
        dir.path(),
        "b_bad.json",
        &EXACT_CFG.replace(
            r#"{"kind": "geometric", "scale": 1.0, "ratio": 0.5}"#,
            r#"{"kind": "power", "p": 2.0}"#,
        ),
    );
    let out = dir.path().join("reports");
    let output = bin()
        .args(["batch", dir.path().to_str().unwrap()])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    // the good scenario still produced its artifacts
    assert!(out.join("a_good.report.json").exists());
    assert!(out.join("a_good.csv").exists());
    // and the batch reports the infeasible one without aborting
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("a_good"));
    assert!(stdout.contains("b_bad"));
}

#[test]
fn zero_tail_konyagin_uses_head_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(
        dir.path(),
        "zero.json",
        r#"{
            "norm": "L2",
            "ambient_dim": 6,
            "chain": {"dims": [1, 2, 3]},
            "sequence": {"kind": "explicit", "values": [1.0, 0.5, 0.0], "tail_value": 0.0},
            "mode": "konyagin",
            "c": 1.0,
            "eps": 0.1
        }"#,
    );
    let cfg = load_config(&cfg_path).unwrap();
    let report = run_scenario(&cfg).unwrap();
    assert!(report.passes());
    let bounds = report.bounds.as_ref().unwrap();
    assert_eq!(bounds.eps, Some(0.1));
    // head rows sit inside [d_n, (1+eps) d_n]; the zero row is exact
    assert!(report.rows[0].rho >= 1.0 - 1e-9);
    assert!(report.rows[0].rho <= 1.1 + 1e-9);
    assert!(report.rows[2].rho <= 1e-9);
    assert!(verify_report(&report).unwrap());
}

#[test]
fn converge_empty_ns_gives_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(
        dir.path(),
        "conv.json",
        &EXACT_CFG.replace(
            "\"mode\": \"exact\"",
            "\"mode\": \"converge\", \"ns\": []",
        ),
    );
    let cfg = load_config(&cfg_path).unwrap();
    let report = run_scenario(&cfg).unwrap();
    assert!(report.convergence.as_ref().unwrap().pairs.is_empty());
    let dir2 = tempfile::tempdir().unwrap();
    let csv = dir2.path().join("empty.csv");
    write_csv(&report, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text, "n,d_n,rho,cert_lower,cert_upper,ratio,pass\n");
}
