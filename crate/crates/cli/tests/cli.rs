//! End-to-end checks of the `entangle-kit` binary: artifact contents,
//! exit codes, and byte-level determinism of reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entangle-kit"))
}

/// Fresh scratch directory, unique per test, removed by the caller.
fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("entangle-kit-it-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn entangle-kit")
}

fn write_ghz3(dir: &Path) -> PathBuf {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![[0.0, 0.0]; 8];
    amps[0] = [r, 0.0];
    amps[7] = [r, 0.0];
    let path = dir.join("ghz3.json");
    let doc = serde_json::json!({ "n": 3, "amplitudes": amps });
    fs::write(&path, serde_json::to_vec(&doc).unwrap()).unwrap();
    path
}

#[test]
fn measure_reports_ghz_invariants() {
    let dir = scratch("measure");
    let state = write_ghz3(&dir);
    let out = run(&[
        "--out",
        dir.to_str().unwrap(),
        "measure",
        "--state",
        state.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("measure.json")).unwrap()).unwrap();
    assert_eq!(report["n_qubits"], 3);
    for k in 0..3 {
        assert!((report["tau1"][k].as_f64().unwrap() - 1.0).abs() < 1e-10);
        assert!((report["site_entropy"][k].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
    assert!((report["three_tangle"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn groundstate_scan_writes_stamped_csv() {
    let dir = scratch("gs-csv");
    let out = run(&[
        "--out",
        dir.to_str().unwrap(),
        "groundstate",
        "--model",
        "ising",
        "--N",
        "6",
        "--h",
        "0.3:0.5:0.1",
        "--ed",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(dir.join("groundstate_ed.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# entangle-kit v"), "missing stamp: {}", lines[0]);
    assert_eq!(lines[1].split(',').next(), Some("h"));
    assert_eq!(lines.len(), 2 + 3, "three field points expected");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn json_format_swaps_tables() {
    let dir = scratch("gs-json");
    let out = run(&[
        "--out",
        dir.to_str().unwrap(),
        "--format",
        "json",
        "groundstate",
        "--model",
        "ising",
        "--N",
        "6",
        "--h",
        "0.4",
        "--ed",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("groundstate_ed.json")).unwrap()).unwrap();
    assert!(doc["version"].is_string());
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
    assert!(doc["rows"][0]["c_nn"].is_number());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn reruns_are_byte_identical() {
    let dir_a = scratch("det-a");
    let dir_b = scratch("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "11",
            "fermion",
            "--random",
            "6",
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir_a.join("fermion_report.json")).unwrap();
    let b = fs::read(dir_b.join("fermion_report.json")).unwrap();
    assert_eq!(a, b, "same seed must give identical bytes");
    let _ = fs::remove_dir_all(&dir_a);
    let _ = fs::remove_dir_all(&dir_b);
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = scratch("codes");

    // Missing required model parameter → argument failure.
    let out = run(&["groundstate", "--model", "xy", "--N", "6", "--h", "0.4"]);
    assert_eq!(out.status.code(), Some(2));

    // Unreadable state file → I/O failure.
    let missing = dir.join("absent.json");
    let out = run(&["measure", "--state", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // Present but unnormalized state → numerical failure.
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"n":1,"amplitudes":[[2.0,0.0],[0.0,0.0]]}"#).unwrap();
    let out = run(&["measure", "--state", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let _ = fs::remove_dir_all(&dir);
}
