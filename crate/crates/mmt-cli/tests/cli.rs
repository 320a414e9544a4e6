//! End-to-end tests of the `mmt` binary: exit codes, artifact shapes, and
//! manifest digests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mmt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmt"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn read_manifest(out_dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

const SIMULATE_OK: &str = r#"{
  "grid": {"num_modes": 128, "box_length": 6.283185307179586},
  "params": {"alpha": 1.5, "beta": 0.2},
  "integrator": {"dt": 1e-3, "t_end": 0.05},
  "initial_data": {"kind": "plane_wave", "amplitude": 0.4, "k": 3}
}"#;

#[test]
fn simulate_produces_artifacts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.json", SIMULATE_OK);
    let out = tmp.path().join("run");
    let output = mmt()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);

    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next().unwrap(), "time,mass,energy,h_alpha_half_sq");
    assert!(lines.clone().count() >= 2, "expected data rows");
    assert!(!series.contains('\r'), "LF line endings expected");

    let manifest = read_manifest(&out);
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["notes"]["status"], "ok");
    assert_eq!(manifest["config_echo"]["params"]["alpha"], 1.5);
    // every listed output exists and matches its recorded digest
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["path"] == "series.csv"));
    assert!(outputs.iter().any(|o| o["path"] == "trajectory.json"));
    for entry in outputs {
        let bytes = std::fs::read(out.join(entry["path"].as_str().unwrap())).unwrap();
        let digest = {
            use sha2::Digest as _;
            hex::encode(sha2::Sha256::digest(&bytes))
        };
        assert_eq!(entry["sha256"].as_str().unwrap(), digest);
    }
    // timestamps parse as RFC 3339
    for key in ["started", "finished"] {
        let ts = manifest[key].as_str().unwrap();
        chrono::DateTime::parse_from_rfc3339(ts).unwrap();
    }
}

#[test]
fn malformed_config_is_exit_1_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SIMULATE_OK.replace("\"alpha\": 1.5", "\"alpha\": 0.9");
    let cfg = write_config(tmp.path(), "bad.json", &bad);
    let output = mmt().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_exit(&output, 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("alpha"), "stderr should name the field: {stderr}");
}

#[test]
fn unknown_config_key_is_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SIMULATE_OK.replace("\"alpha\": 1.5", "\"alpha\": 1.5, \"alfa\": 2.0");
    let cfg = write_config(tmp.path(), "bad.json", &bad);
    let output = mmt().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_exit(&output, 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("alfa"), "stderr should name the unknown key: {stderr}");
}

#[test]
fn missing_config_file_is_exit_1() {
    let output = mmt()
        .args(["simulate", "--config", "/nonexistent/sim.json"])
        .output()
        .unwrap();
    assert_exit(&output, 1);
}

#[test]
fn numerical_blowup_is_exit_2_with_failure_time() {
    let tmp = tempfile::tempdir().unwrap();
    // a huge plane wave with a large time step drives the cubic term to overflow
    let cfg = write_config(
        tmp.path(),
        "blow.json",
        r#"{
          "grid": {"num_modes": 128, "box_length": 6.283185307179586},
          "params": {"alpha": 1.5, "beta": 0.2},
          "integrator": {"dt": 0.5, "t_end": 50.0},
          "initial_data": {"kind": "plane_wave", "amplitude": 1e6, "k": 30}
        }"#,
    );
    let out = tmp.path().join("run");
    let output = mmt()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 2);
    let manifest = read_manifest(&out);
    assert_eq!(manifest["notes"]["status"], "numerical-failure");
    assert!(manifest["notes"]["failure_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn probe_assert_slope_passes_within_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "probe.json",
        r#"{
          "family": "LLL",
          "params": {"alpha": 1.5, "beta": -0.3},
          "t": 0.1,
          "eps": 0.01,
          "n_exponents": [8, 11],
          "quad_points": 96,
          "out_points": 48
        }"#,
    );
    let out = tmp.path().join("run");
    let output = mmt()
        .args(["probe", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .args(["--assert-slope", "0.15"])
        .output()
        .unwrap();
    assert_exit(&output, 0);

    let csv = std::fs::read_to_string(out.join("probe.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("N,"));
    let manifest = read_manifest(&out);
    assert!(manifest["notes"]["deviation"].as_f64().unwrap() <= 0.15);
}

#[test]
fn probe_assert_slope_fails_with_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "probe.json",
        r#"{
          "family": "HLL",
          "params": {"alpha": 1.5, "beta": 0.4},
          "t": 0.1,
          "eps": 0.01,
          "n_exponents": [8, 10],
          "quad_points": 64,
          "out_points": 32
        }"#,
    );
    let output = mmt()
        .args(["probe", "--config"])
        .arg(&cfg)
        .args(["--assert-slope", "1e-9"])
        .output()
        .unwrap();
    assert_exit(&output, 3);
}

#[test]
fn map_emits_region_chart() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "map.json",
        r#"{
          "alpha": 2.0,
          "beta_range": [-0.2, 0.45],
          "s_range": [0.0, 1.5],
          "resolution": 12
        }"#,
    );
    let out = tmp.path().join("run");
    let output = mmt()
        .args(["map", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let csv = std::fs::read_to_string(out.join("region.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12 * 12);
}

#[test]
fn bench_unknown_case_is_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bench.json",
        r#"{"cases": ["b1", "z9"], "alphas": [2.0]}"#,
    );
    let output = mmt().args(["bench", "--config"]).arg(&cfg).output().unwrap();
    assert_exit(&output, 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("z9"), "stderr should name the bad case: {stderr}");
}

#[test]
fn bench_small_sweep_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bench.json",
        r#"{
          "cases": ["b1", "t1"],
          "alphas": [2.0],
          "n_sweep": [16.0, 32.0, 64.0],
          "l_sweep": [1.0, 4.0],
          "resolution": 32,
          "h_range": [{"n1": 64.0, "n2": 64.0, "n3": 8.0, "alpha": 2.0, "samples": 4000}]
        }"#,
    );
    let out = tmp.path().join("run");
    let output = mmt()
        .args(["bench", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "case,alpha,N,L,measured,bound,ratio");
    let manifest = read_manifest(&out);
    assert!(manifest["notes"]["worst_ratio"].as_f64().unwrap() <= 1.0);
    assert_eq!(manifest["notes"]["h_range_pass"], true);
}

#[test]
fn selftest_exits_zero() {
    let output = mmt().arg("selftest").output().unwrap();
    assert_exit(&output, 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    for suite in ["spectral", "dynamics", "thresholds", "probe", "bench"] {
        assert!(stdout.contains(suite), "missing suite line for {suite}: {stdout}");
    }
}

#[test]
fn bad_thread_count_is_exit_1() {
    let output = mmt().args(["selftest", "--threads", "0"]).output().unwrap();
    assert_exit(&output, 1);
}
