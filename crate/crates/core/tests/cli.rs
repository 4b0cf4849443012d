//! End-to-end checks of the command-line binary: exit codes, JSON output,
//! CSV side files, and report determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conequill"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn certify_first_example_exits_zero_with_s2() {
    let config = config_path("example1.toml");
    let output = run(&["certify", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("\"pattern\": \"S2\""), "{text}");
    assert!(text.contains("\"solution_count\": 1"));
}

#[test]
fn certify_second_example_exits_zero_with_eig13() {
    let config = config_path("example2.toml");
    let output = run(&["certify", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout_of(&output).contains("\"pattern\": \"EIG_13\""));
}

#[test]
fn single_radius_cannot_match_and_exits_three() {
    let text = std::fs::read_to_string(config_path("example1.toml")).unwrap();
    let single = text.replace("rho = [1.0, 28.0]", "rho = [1.0]");
    let dir = std::env::temp_dir();
    let path = dir.join("conequill_single_rho.toml");
    std::fs::write(&path, single).unwrap();
    let output = run(&["certify", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stdout_of(&output).contains("\"pattern\": \"NONE\""));
}

#[test]
fn missing_config_exits_two() {
    let output = run(&["certify", "/nonexistent/problem.toml"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());
}

fn without_timestamp(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|line| !line.contains("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn report_is_deterministic_and_writes_csv() {
    let config = config_path("example1.toml");
    let dir = std::env::temp_dir();
    let out_a = dir.join("conequill_report_a.json");
    let out_b = dir.join("conequill_report_b.json");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "report",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(output.status.code(), Some(0));
    }
    assert_eq!(without_timestamp(&out_a), without_timestamp(&out_b));

    let csv = out_a.with_extension("solution.csv");
    let curve = std::fs::read_to_string(csv).unwrap();
    assert!(curve.starts_with("node,value\n"));
    assert_eq!(curve.lines().count(), 130, "129 nodes plus a header");
}
