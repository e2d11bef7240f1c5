//! End-to-end tests of the binary: exit codes, report emission, determinism,
//! and cross-command consistency.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn stabcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabcheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn check_passing_scenario_exits_zero() {
    let out = stabcheck(&["check", "--scenario", scenario("two_generals.scn").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("108 runs"));
    assert!(text.contains("PASS  second-depth-broadcaster"));
    assert!(text.contains("theorem: hypotheses pass, conclusions pass"));
}

#[test]
fn check_negative_scenario_exits_one_and_names_failures() {
    let out = stabcheck(&["check", "--scenario", scenario("no_comm.scn").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL  second-depth-broadcaster"));
    assert!(text.contains("FAIL  stable-choice"));
    assert!(text.contains("conclusions not asserted"));
}

#[test]
fn check_missing_scenario_exits_two() {
    let out = stabcheck(&["check", "--scenario", "scenarios/does-not-exist.scn"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_rejects_unknown_flags() {
    let out = stabcheck(&[
        "check",
        "--scenario",
        scenario("two_generals.scn").to_str().unwrap(),
        "--frobnicate",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_identical_modulo_timestamp_and_timings() {
    let dir = std::env::temp_dir();
    let a = dir.join("stabcheck-report-a.json");
    let b = dir.join("stabcheck-report-b.json");
    for path in [&a, &b] {
        let out = stabcheck(&[
            "check",
            "--scenario",
            scenario("two_generals.scn").to_str().unwrap(),
            "--report",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let normalize = |path: &Path| {
        let mut doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        doc["generated_at_unix_ms"] = 0u64.into();
        doc["timings_ms"] = serde_json::json!({});
        serde_json::to_string_pretty(&doc).unwrap()
    };
    assert_eq!(normalize(&a), normalize(&b));
}

#[test]
fn eval_tautology_and_point_probe() {
    let two_generals = scenario("two_generals.scn");
    let out = stabcheck(&[
        "eval",
        "--scenario",
        two_generals.to_str().unwrap(),
        "init(1,0) -> init(1,0)",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("true"));

    let out = stabcheck(&[
        "eval",
        "--scenario",
        two_generals.to_str().unwrap(),
        "K 1 init(2,1)",
        "--run",
        "17",
        "--t",
        "1",
        "--trace",
    ]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    assert!(stdout(&out).contains("class size"));
}

#[test]
fn eval_decide_matches_enumerated_agreement_value() {
    let two_generals = scenario("two_generals.scn");
    let out = stabcheck(&[
        "enumerate",
        "--scenario",
        two_generals.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["run_count"], 108);
    // pick a run with a mixed input: agreement under min must be 0
    let run = doc["runs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["input"] == serde_json::json!([0, 1]))
        .unwrap();
    assert_eq!(run["agreement_value"], 0);
    let id = run["id"].as_u64().unwrap().to_string();
    let out = stabcheck(&[
        "eval",
        "--scenario",
        two_generals.to_str().unwrap(),
        "<> decide(1,0)",
        "--run",
        &id,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("true"));
}

#[test]
fn eval_bad_formula_exits_two() {
    let out = stabcheck(&[
        "eval",
        "--scenario",
        scenario("two_generals.scn").to_str().unwrap(),
        "K 1 init(2,",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax error"));
}

#[test]
fn replay_prints_knowledge_trace() {
    let out = stabcheck(&[
        "replay",
        "--scenario",
        scenario("two_generals.scn").to_str().unwrap(),
        "--run",
        "30",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("fixpoint"));
    assert!(text.contains("agent 1: knows"));
    assert!(text.contains("agreed value"));
}

#[test]
fn flag_overrides_change_the_enumeration() {
    let out = stabcheck(&[
        "check",
        "--scenario",
        scenario("two_generals.scn").to_str().unwrap(),
        "--horizon",
        "1",
        "--mode",
        "strict",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("12 runs")); // 4 inputs x 3 patterns

    let out = stabcheck(&[
        "check",
        "--scenario",
        scenario("two_generals.scn").to_str().unwrap(),
        "--budget",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn triangle_scenario_passes_under_both_strategies() {
    for strategy in ["min", "max"] {
        let out = stabcheck(&[
            "check",
            "--scenario",
            scenario("triangle.scn").to_str().unwrap(),
            "--strategy",
            strategy,
        ]);
        assert_eq!(out.status.code(), Some(0), "strategy {strategy}");
        assert!(stdout(&out).contains("392 runs"));
    }
}
