use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn vck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vck"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn dim_on_powerset() {
    let out = vck(&["dim", "--input", &fixture("powerset_2x2.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["vck"], 2);
}

#[test]
fn sauer_on_thresholds_passes() {
    let out = vck(&[
        "sauer",
        "--input",
        &fixture("thresholds_10.json"),
        "--m",
        "5",
        "--d",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 252);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn sauer_fails_when_the_dimension_is_too_large() {
    // The powerset shatters its 2-box, so the bound for d = 1 is violated.
    let out = vck(&[
        "sauer",
        "--input",
        &fixture("powerset_2x2.json"),
        "--m",
        "1",
        "--d",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn input_errors_exit_two() {
    let out = vck(&["dim", "--input", &fixture("no_such_file.json")]);
    assert_eq!(out.status.code(), Some(2));
    let out = vck(&["dim", "--input", &fixture("malformed.json")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 5, column 1"), "{err}");
    let out = vck(&[
        "pack",
        "--input",
        &fixture("thresholds_10.json"),
        "--epsilon",
        "3/2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pack_reports_a_verified_certificate() {
    let out = vck(&[
        "pack",
        "--input",
        &fixture("thresholds_10.json"),
        "--measure",
        &fixture("measure_10.json"),
        "--epsilon",
        "1/4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verified"], true);
    assert_eq!(v["centers"], serde_json::json!([0, 2, 5, 8]));
}

#[test]
fn learn_embeds_the_resolved_config() {
    let out = vck(&[
        "learn",
        "--input",
        &fixture("rectangles_4x4.json"),
        "--epsilon",
        "1/5",
        "--delta",
        "1/5",
        "--trials",
        "10",
        "--concepts",
        "3",
        "--budget-terms",
        "1",
        "--budget-fibers",
        "1",
        "--budget-centers",
        "1",
        "--center-fibers",
        "false",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for key in ["ell", "n2", "rho_hat", "centers", "delta_prime", "seed"] {
        assert!(!v["config"][key].is_null(), "missing {key}");
    }
    assert_eq!(v["concepts"].as_array().unwrap().len(), 3);
}

#[test]
fn regularity_checks_decompositions() {
    let input = fixture("less_than_4.json");
    let out = vck(&["regularity", "--input", &input, "--epsilon", "1/4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["slicewise"]["max"], 1);
    assert_eq!(v["net"]["centers"], serde_json::json!([[0], [2]]));
    assert_eq!(v["verification"]["pass"], true);

    let exact = fixture("less_than_4_exact.json");
    let out = vck(&[
        "regularity",
        "--input",
        &input,
        "--epsilon",
        "1/100",
        "--decomposition",
        &exact,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verification"]["max_dist"], "0/1");

    // Too few anchors for four distinct slices: a partial report.
    let out = vck(&[
        "regularity",
        "--input",
        &input,
        "--epsilon",
        "1/100",
        "--anchors",
        "2",
        "--budget-terms",
        "1",
        "--budget-fibers",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["partial"], true);
    assert_eq!(v["packing"]["verified"], true);
}

#[test]
fn csv_is_a_projection_of_the_rows() {
    let out = vck(&[
        "pack",
        "--input",
        &fixture("thresholds_10.json"),
        "--epsilon",
        "1/4",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("dist,expr,member"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn output_flag_writes_the_report() {
    let dir = std::env::temp_dir().join(format!("vck-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("dim.json");
    let out = vck(&[
        "dim",
        "--input",
        &fixture("powerset_2x2.json"),
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["vck"], 2);
    std::fs::remove_dir_all(&dir).unwrap();
}
