use std::fs;

use assert_cmd::Command;
use serde_json::Value;
use tempfile::tempdir;

fn symclone() -> Command {
    let mut cmd = Command::cargo_bin("symclone").unwrap();
    cmd.env_remove("SYMCLONE_ORACLE_BUDGET");
    cmd
}

fn run_json(args: &[&str]) -> Value {
    let out = symclone().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn matrix_entry(v: &Value, i: usize, j: usize) -> (f64, f64) {
    let e = &v[i][j];
    (e[0].as_f64().unwrap(), e[1].as_f64().unwrap())
}

#[test]
fn clone_up_state_one_to_three() {
    let v = run_json(&["clone", "--d", "2", "--M", "1", "--N", "3", "--pure", "1,0"]);
    let red = &v["reduced_output"];
    assert!((matrix_entry(red, 0, 0).0 - 7.0 / 9.0).abs() < 1e-12);
    assert!((matrix_entry(red, 1, 1).0 - 2.0 / 9.0).abs() < 1e-12);
    assert!((v["fidelity"].as_f64().unwrap() - 7.0 / 9.0).abs() < 1e-12);
    assert_eq!(v["optimal_shrink"], "5/9");
}

#[test]
fn remainder_of_three_copies_clones_to_79_over_108() {
    let dir = tempdir().unwrap();
    let (a, b) = ("0.6", "0.48+0.64i");
    let three = dir.path().join("three.json");
    symclone()
        .args(["clone", "--N", "3", "--pure", &format!("{a},{b}")])
        .args(["--out", three.to_str().unwrap()])
        .assert()
        .success();
    let three_v: Value = serde_json::from_str(&fs::read_to_string(&three).unwrap()).unwrap();
    let three_state = dir.path().join("three_state.json");
    fs::write(&three_state, three_v["output"].to_string()).unwrap();

    let kept = run_json(&["reduce", "--state", three_state.to_str().unwrap(), "--keep", "2", "--oracle"]);
    assert!(kept["oracle_deviation"].as_f64().unwrap() < 1e-12);
    let eq1 = dir.path().join("eq1.json");
    fs::write(&eq1, kept["state"].to_string()).unwrap();

    let v = run_json(&[
        "clone",
        "--d",
        "2",
        "--M",
        "2",
        "--N",
        "3",
        "--state",
        eq1.to_str().unwrap(),
        "--reference",
        &format!("{a},{b}"),
        "--oracle",
    ]);
    assert!((v["fidelity"].as_f64().unwrap() - 79.0 / 108.0).abs() < 1e-12);
    assert!(v["oracle"]["max_state_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn cloning_to_same_size_returns_input() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("s.json");
    fs::write(
        &path,
        r#"{"d": 2, "M": 2, "entries": [
            {"m": [2, 0], "mp": [2, 0], "re": 0.5, "im": 0.0},
            {"m": [2, 0], "mp": [1, 1], "re": 0.125, "im": -0.25},
            {"m": [1, 1], "mp": [1, 1], "re": 0.3, "im": 0.0},
            {"m": [0, 2], "mp": [0, 2], "re": 0.2, "im": 0.0}]}"#,
    )
    .unwrap();
    let v = run_json(&["clone", "--d", "2", "--M", "2", "--N", "2", "--state", path.to_str().unwrap()]);
    let input: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["output"], input);
}

#[test]
fn csv_rows_follow_state_schema() {
    let out = symclone()
        .args(["clone", "--N", "2", "--pure", "1,1", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,mp,re,im"));
    let rows: Vec<_> = lines.collect();
    // the (2,0)-(0,2) coherence is exactly zero and omitted
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("2 0,2 0,"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        &["clone", "--N", "4", "--pure", "0.3,0.2-0.5i,0.7", "--M", "2"][..],
        &["verify", "--seed", "11"][..],
        &["pipeline", "--task", "paper-example"][..],
        &["mub", "--d", "5"][..],
    ] {
        let a = symclone().args(args).output().unwrap();
        let b = symclone().args(args).output().unwrap();
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn floats_are_written_with_17_significant_digits() {
    let out = symclone()
        .args(["clone", "--N", "3", "--pure", "1,0"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.trim_start().starts_with("\"fidelity\"")).unwrap();
    let literal = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let digits = literal.trim_start_matches("0.").trim_start_matches('0');
    assert_eq!(digits.len(), 17, "{literal}");
    let parsed: f64 = literal.parse().unwrap();
    assert!((parsed - 7.0 / 9.0).abs() < 1e-15);
    assert_eq!(serde_json::to_string(&parsed).unwrap().parse::<f64>().unwrap().to_bits(), parsed.to_bits());
}

#[test]
fn verify_passes_for_any_seed_and_fails_with_fault() {
    for seed in ["7", "123456"] {
        let v = run_json(&["verify", "--seed", seed]);
        assert_eq!(v["passed"], true);
        let names: Vec<_> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }
    symclone().args(["verify", "--inject-fault"]).assert().code(1);
}

#[test]
fn mub_reports() {
    let v = run_json(&["mub", "--d", "3"]);
    assert_eq!(v["bases"], 4);
    assert!(v["overlaps"]["unbiasedness_deviation"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["qkd"]["analytic_fidelity"], "3/4");
    let out = symclone().args(["mub", "--d", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("must be prime"));
}

#[test]
fn pipeline_task_and_stages() {
    let v = run_json(&["pipeline", "--task", "paper-example"]);
    let verdicts: Vec<_> = v.as_array().unwrap().iter().map(|r| r["verdict"].clone()).collect();
    assert_eq!(verdicts, [false, false, false, true].map(Value::Bool));
    let table = symclone()
        .args(["pipeline", "--task", "paper-example", "--format", "table"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8_lossy(&table.stdout).matches("verdict").count(), 4);

    let v = run_json(&["pipeline", "--stages", "3:keep2,3", "--pure", "0.8,0.6i"]);
    let stages = v[0]["stages"].as_array().unwrap();
    assert!((stages[0]["fidelity"]["value"].as_f64().unwrap() - 7.0 / 9.0).abs() < 1e-12);
    assert!((stages[1]["fidelity"]["value"].as_f64().unwrap() - 79.0 / 108.0).abs() < 1e-12);
    assert_eq!(stages[1]["predicted"]["exact"], "79/108");
}

#[test]
fn exit_codes() {
    // usage and parse errors
    symclone().args(["clone", "--N", "3"]).assert().code(2);
    symclone().args(["clone", "--N", "3", "--pure", "1,x"]).assert().code(2);
    symclone().args(["pipeline", "--stages", "3:keepx", "--pure", "1,0"]).assert().code(2);
    symclone().args(["frobnicate"]).assert().code(2);
    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"d": 2, "M": 1, "entries": [], "extra": true}"#).unwrap();
    symclone().args(["clone", "--N", "2", "--state", bad.to_str().unwrap()]).assert().code(2);
    // domain and scale errors
    symclone().args(["clone", "--N", "40", "--pure", "1,0"]).assert().code(3);
    symclone().args(["clone", "--M", "3", "--N", "2", "--pure", "1,0"]).assert().code(3);
    symclone().args(["pipeline", "--stages", "3:keep3,2", "--pure", "1,0"]).assert().code(3);
    symclone()
        .env("SYMCLONE_ORACLE_BUDGET", "4")
        .args(["clone", "--N", "3", "--pure", "1,0", "--oracle"])
        .assert()
        .code(3);
    symclone()
        .env("SYMCLONE_ORACLE_BUDGET", "lots")
        .args(["verify"])
        .assert()
        .code(2);
}

#[test]
fn mixed_cascade_needs_reference() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("mixed.json");
    fs::write(
        &path,
        r#"{"d": 2, "M": 1, "entries": [
            {"m": [1, 0], "mp": [1, 0], "re": 0.75, "im": 0.0},
            {"m": [0, 1], "mp": [0, 1], "re": 0.25, "im": 0.0}]}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    symclone().args(["pipeline", "--stages", "3", "--state", p]).assert().code(2);
    let v = run_json(&["pipeline", "--stages", "3", "--state", p, "--reference", "1,0"]);
    // 0.75 shrunk by 5/9 toward 1/2
    let want = 0.5 + 5.0 / 9.0 * 0.25;
    assert!((v[0]["stages"][0]["fidelity"]["value"].as_f64().unwrap() - want).abs() < 1e-12);
}

#[test]
fn reduce_single_and_table_output() {
    let v = run_json(&["reduce", "--pure", "0.6,0.8", "--M", "3", "--oracle"]);
    assert!(v["oracle_deviation"].as_f64().unwrap() < 1e-10);
    assert!((matrix_entry(&v["reduced"], 0, 1).0 - 0.48).abs() < 1e-12);
    let out = symclone()
        .args(["clone", "--N", "2", "--pure", "1,0", "--format", "table"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("optimal 2/3"));
}
