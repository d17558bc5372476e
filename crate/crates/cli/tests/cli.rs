use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn shs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shs")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_exit_codes_follow_the_assumptions() {
    let ok = shs(&["--config", path_str(&config("constant_family.json")), "check"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("monotonicity"));
    let bad = shs(&["--config", path_str(&config("h11_negative.json")), "check"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn malformed_config_reports_location_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("constant_family.json")).unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    let out = shs(&["--config", path_str(&truncated), "check"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    let missing = shs(&["--config", "/nonexistent/config.json", "check"]);
    assert_eq!(code(&missing), 2);
    let unknown = shs(&["check", "--no-such-flag"]);
    assert_eq!(code(&unknown), 2);
}

#[test]
fn exhausted_link_budget_is_a_stage_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = shs(&[
        "--config",
        path_str(&config("constant_family.json")),
        "--out-dir",
        path_str(dir.path()),
        "spectrum",
        "--count",
        "3",
        "--max-links",
        "2",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectrum"));
}

#[test]
fn help_lists_examples_and_exit_codes() {
    let out = shs(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Examples:") && text.contains("Exit codes"));
    let sub = shs(&["pipeline", "--help"]);
    assert!(String::from_utf8_lossy(&sub.stdout).contains("Example:"));
}

#[test]
fn manifest_lists_every_output_with_its_digest() {
    let dir = tempfile::tempdir().unwrap();
    let out = shs(&[
        "--config",
        path_str(&config("constant_family.json")),
        "--out-dir",
        path_str(dir.path()),
        "--seed",
        "3",
        "spectrum",
        "--count",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("spectrum.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "spectrum");
    assert_eq!(manifest["seed"], 3);
    let config_bytes = std::fs::read(config("constant_family.json")).unwrap();
    assert_eq!(manifest["config_sha256"], hex::encode(Sha256::digest(&config_bytes)));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    for o in outputs {
        let bytes = std::fs::read(dir.path().join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"], hex::encode(Sha256::digest(&bytes)));
        assert_eq!(o["bytes"], bytes.len());
    }
    let records: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("spectrum.json")).unwrap()).unwrap();
    let rho = records[1]["rho"].as_f64().unwrap();
    assert!((rho - 3.25).abs() < 1e-6, "{rho}");
}

#[test]
fn pipeline_with_zero_count_runs_checks_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = shs(&[
        "--config",
        path_str(&config("constant_family.json")),
        "--out-dir",
        path_str(dir.path()),
        "pipeline",
        "--count",
        "0",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["check.json", "config.normalized.json", "pipeline.manifest.json"]);
}

#[test]
fn multi_dimensional_pipeline_simulates_the_first_eigenfunction() {
    let dir = tempfile::tempdir().unwrap();
    let out = shs(&[
        "--config",
        path_str(&config("block_diagonal.json")),
        "--out-dir",
        path_str(dir.path()),
        "pipeline",
        "--paths",
        "50",
        "--dt",
        "0.005",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let spectrum: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(spectrum.as_array().unwrap().len(), 1);
    assert!((spectrum[0]["rho"].as_f64().unwrap() - 1.125).abs() < 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("eigenfunction_m1.csv")).unwrap();
    assert!(csv.starts_with("path_id,t,state,x1,x2,y1,y2,"), "{}", csv.lines().next().unwrap());
    assert!(!dir.path().join("growth.json").exists());
}

#[test]
fn eigenfunction_and_growth_read_record_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = path_str(dir.path());
    let cfg = config("constant_family.json");
    let spectrum = shs(&["--config", path_str(&cfg), "--out-dir", d, "spectrum", "--count", "5"]);
    assert_eq!(code(&spectrum), 0);
    let records = dir.path().join("spectrum.json");
    let eig = shs(&[
        "--config",
        path_str(&cfg),
        "--out-dir",
        d,
        "eigenfunction",
        "--record",
        path_str(&records),
        "--index",
        "2",
        "--paths",
        "20",
        "--csv-paths",
        "2",
    ]);
    assert_eq!(code(&eig), 0, "{}", String::from_utf8_lossy(&eig.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("eigenfunction.json")).unwrap()).unwrap();
    assert_eq!(summary["m"], 2);
    assert_eq!(summary["report"]["x0"].as_f64(), Some(0.0));
    let csv = std::fs::read_to_string(dir.path().join("eigenfunction.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("0,") || l.starts_with("1,")));

    let growth = shs(&["--out-dir", d, "growth", "--in", path_str(&records)]);
    assert_eq!(code(&growth), 0);
    let fit: serde_json::Value = serde_json::from_slice(&growth.stdout).unwrap();
    assert!((fit["exponent"].as_f64().unwrap() - 2.0).abs() < 0.05, "{fit}");
}
