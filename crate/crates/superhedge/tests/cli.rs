//! End-to-end runs of the command-line binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superhedge")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 diagnostics")
}

fn scratch(name: &str, text: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join(name);
    std::fs::write(&path, text).expect("write model");
    (dir, path)
}

#[test]
fn price_of_m1_is_one_third() {
    let out = run(&["price", fixture("m1").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("price class=survival_strict t=0 atom={up,down} value=1/3 theta=2/3"), "{text}");
    assert!(text.contains("aip=holds"), "{text}");
}

#[test]
fn stopped_m3_reports_the_violation_with_certificate() {
    let out = run(&["aip", fixture("m3").to_str().unwrap(), "--model", "stopped"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("aip model=stopped t=0 atom={a} verdict=violated certificate="), "{text}");
    assert!(text.contains("aip model=stopped holds=false"), "{text}");
}

#[test]
fn bar_m3_has_no_immediate_profit() {
    let out = run(&["aip", fixture("m3").to_str().unwrap(), "--model", "bar"]);
    assert!(stdout(&out).contains("aip model=bar holds=true"));
}

#[test]
fn price_of_m3_flags_the_profit() {
    let out = run(&["price", fixture("m3").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("t=0 atom={a} value=-inf"), "{text}");
    assert!(text.contains("aip=violated t=0 atom={a}"), "{text}");
}

#[test]
fn decomposition_of_m2_telescopes() {
    for class in ["survival_strict", "survival_incl", "at_default", "mixed"] {
        let out = run(&["decompose", fixture("m2").to_str().unwrap(), "--class", class]);
        assert_eq!(out.status.code(), Some(0), "{class}: {}", stderr(&out));
        assert!(stdout(&out).contains("telescoping=exact"));
    }
}

#[test]
fn validate_accepts_every_fixture() {
    for name in ["m1", "m2", "m3"] {
        let out = run(&["validate", fixture(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
        assert!(stdout(&out).starts_with("status=valid"));
    }
}

#[test]
fn fixtures_only_verification_passes() {
    let out = run(&["verify", "--suite", "all", "--models", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).lines().last().unwrap().ends_with("status=pass"));
}

#[test]
fn verification_reports_are_deterministic() {
    let args = ["verify", "--suite", "all", "--models", "4", "--seed", "11"];
    let first = run(&args);
    let second = run(&args);
    let single = Command::new(env!("CARGO_BIN_EXE_superhedge"))
        .args(args)
        .env("SUPERHEDGE_WORKERS", "1")
        .output()
        .expect("binary runs");
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, single.stdout);
}

#[test]
fn generation_is_deterministic_and_valid() {
    let args = ["gen", "--seed", "7", "--regime", "with_deadzone", "--prices", "free"];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, run(&args).stdout);
    let (_dir, path) = scratch("gen.json", &stdout(&first));
    assert_eq!(run(&["validate", path.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn zero_denominator_is_an_input_error() {
    let text = std::fs::read_to_string(fixture("m1")).unwrap().replacen("\"1/2\"", "\"1/0\"", 1);
    let (_dir, path) = scratch("bad.json", &text);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("zero denominator"), "{}", stderr(&out));
}

#[test]
fn non_refining_filtration_names_the_blocks() {
    let mut model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fixture("m2")).unwrap()).unwrap();
    model["filtration"] = serde_json::json!([[["u1", "uinf"], ["d1", "dinf"]], [["u1", "uinf", "d1", "dinf"]]]);
    let (_dir, path) = scratch("coarse.json", &model.to_string());
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let message = stderr(&out);
    assert!(message.contains("{u1,uinf,d1,dinf}") && message.contains("t=1"), "{message}");
}

#[test]
fn missing_file_is_an_input_error() {
    assert_eq!(run(&["validate", "/nonexistent/model.json"]).status.code(), Some(2));
}

#[test]
fn bad_worker_cap_is_an_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_superhedge"))
        .args(["verify", "--models", "0"])
        .env("SUPERHEDGE_WORKERS", "zero")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}
