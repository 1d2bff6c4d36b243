//! Process-level contract tests: exit codes, error JSON, manifest checksums
//! and config round-trips.

use std::fs;
use std::process::Command;

use sha2::{Digest, Sha256};

fn gcenter() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gcenter"))
}

#[test]
fn unknown_flag_exits_2_with_json_error() {
    let out = gcenter().args(["quartet", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn malformed_input_exits_4_naming_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("par.csv");
    fs::write(&bad, "energy_meV,counts\n969.0,1.0\n969.5,oops\n").unwrap();
    let out = gcenter()
        .args(["classify", "--parallel"])
        .arg(&bad)
        .arg("--perpendicular")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "schema");
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("row 3") && msg.contains("counts"), "{msg}");
}

#[test]
fn manifest_checksums_match_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = gcenter()
        .args(["ensemble", "--strain-dir", "110", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "ensemble");
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for a in artifacts {
        let contents = fs::read(dir.path().join(a["path"].as_str().unwrap())).unwrap();
        let sha: String = Sha256::digest(&contents)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(a["sha256"].as_str().unwrap(), sha, "{}", a["path"]);
    }
}

#[test]
fn emitted_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("params.json");
    let run1 = dir.path().join("run1");
    let run2 = dir.path().join("run2");
    let out = gcenter()
        .args(["spectrum", "--model", "triplet", "--polarizer-deg", "90", "--emit-config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&run1)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = gcenter()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&run2)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["report.json", "spectrum.csv", "lines.csv", "manifest.json"] {
        assert_eq!(
            fs::read_to_string(run1.join(name)).unwrap(),
            fs::read_to_string(run2.join(name)).unwrap(),
            "{name} differs between flag run and config run"
        );
    }
}

#[test]
fn diagram_fits_measured_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("diagram.csv");
    let mut text = String::from("angle_deg,intensity\n");
    for k in 0..36 {
        let theta = (5.0 * k as f64).to_radians();
        text.push_str(&format!(
            "{},{:.6}\n",
            5 * k,
            0.6 * (theta - 0.5f64).cos().powi(2) + 0.4
        ));
    }
    fs::write(&data, text).unwrap();
    let out = gcenter()
        .args(["diagram", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let v = report["visibility"].as_f64().unwrap();
    assert!((v - 0.6).abs() < 1e-6, "visibility {v}");
    let phi = report["orientation_deg"].as_f64().unwrap();
    assert!((phi - 28.6479).abs() < 0.01, "orientation {phi}");
}
