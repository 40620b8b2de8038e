//! Drives the compiled binary end to end: generation, config-driven
//! solves with their artifacts, trace comparison, and the error paths a
//! user is most likely to hit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proxadmm::model::problem_from_json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxadmm"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("proxadmm-cli-{tag}-{}", std::process::id()));
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn small_config(out_dir: &Path, audits: bool) -> String {
    format!(
        r#"{{
  "generate": {{"family": "uniform_qp", "n": 6, "m": 2, "seed": 4}},
  "algo": "prox_alm",
  "params": {{
    "penalty_weight": 10.0, "dual_stepsize": 2.5, "smoothing_factor": 0.5,
    "primal_stepsize": 0.01, "prox_weight": 30.0,
    "max_iter": 2000, "stop_tol": 1e-8, "record_every": 50
  }},
  "audits": {{"descent": {}, "error_bounds": {}}},
  "output_dir": {:?},
  "stop_rule": "residual_sum"
}}"#,
        audits, audits, out_dir
    )
}

#[test]
fn gen_output_round_trips_through_the_model() {
    let dir = scratch("gen");
    let path = dir.join("instance.json");
    let out = bin()
        .args(["gen", "--family", "two_block_qp", "--n", "8", "--m", "2", "--seed", "3"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("wrote"));

    let text = fs::read_to_string(&path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["Q", "r", "A", "b", "lower", "upper", "blocks"] {
        assert!(doc.get(key).is_some(), "missing key {key}");
    }
    let prob = problem_from_json(&text).unwrap();
    assert_eq!(prob.dim(), 8);
    assert_eq!(prob.num_constraints(), 2);
    assert!(prob.blocks.is_some());
}

#[test]
fn gen_rejects_undersized_instances() {
    let dir = scratch("gen-bad");
    let out = bin()
        .args(["gen", "--family", "uniform_qp", "--n", "1", "--m", "1", "--seed", "1"])
        .arg("--out")
        .arg(dir.join("x.json"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("n must be at least 2"), "{}", stderr_of(&out));
}

#[test]
fn solve_writes_consistent_artifacts_and_reruns_identically() {
    let run_a = scratch("solve-a");
    let run_b = scratch("solve-b");
    for dir in [&run_a, &run_b] {
        let cfg_path = dir.join("config.json");
        fs::write(&cfg_path, small_config(&dir.join("out"), true)).unwrap();
        let out = bin().arg("solve").arg("--config").arg(&cfg_path).output().unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
        assert!(stdout_of(&out).contains("wrote"));
    }

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_a.join("out/summary.json")).unwrap()).unwrap();
    let trace = fs::read_to_string(run_a.join("out/trace.csv")).unwrap();
    let audits: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_a.join("out/audits.json")).unwrap()).unwrap();

    // The summary's feasibility must be the last trace row's, field for field.
    let last_row = trace.lines().last().unwrap();
    let feas_cell: f64 = last_row.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(summary["feas"].as_f64().unwrap(), feas_cell);
    assert!(summary["iterations"].as_u64().is_some());
    assert!(summary["diverged"] == serde_json::Value::Bool(false));

    // Audit sections exist and report no violations on this tame run.
    for section in ["descent", "error_bounds"] {
        let checks = audits[section]["checks"].as_array().unwrap();
        assert!(!checks.is_empty(), "no {section} checks");
        assert!(
            checks.iter().all(|c| c["pass"].as_bool().unwrap() || c["skipped"].as_bool().unwrap()),
            "{section} violations: {checks:?}"
        );
    }

    // Determinism: the second run's trace is byte-identical, and the
    // summaries agree on everything but wall time.
    let trace_b = fs::read_to_string(run_b.join("out/trace.csv")).unwrap();
    assert_eq!(trace, trace_b);
    let mut summary_b: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_b.join("out/summary.json")).unwrap()).unwrap();
    let mut summary_a = summary.clone();
    summary_a.as_object_mut().unwrap().remove("wall_time_s");
    summary_b.as_object_mut().unwrap().remove("wall_time_s");
    assert_eq!(summary_a, summary_b);
}

#[test]
fn extended_trace_appends_a_populated_gap_column() {
    let dir = scratch("ext");
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, small_config(&dir.join("out"), false)).unwrap();
    let out = bin()
        .arg("solve")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--extended-trace")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    let trace = fs::read_to_string(dir.join("out/trace.csv")).unwrap();
    let mut lines = trace.lines();
    let header = lines.next().unwrap();
    assert!(header.ends_with(",opt_gap"), "header: {header}");
    let last = lines.last().unwrap();
    let gap_cell = last.split(',').next_back().unwrap();
    assert!(!gap_cell.is_empty());
    assert!(gap_cell.parse::<f64>().unwrap().is_finite());
}

#[test]
fn compare_reports_zero_spread_for_identical_traces() {
    let dir = scratch("cmp");
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, small_config(&dir.join("out"), false)).unwrap();
    let out = bin().arg("solve").arg("--config").arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    let trace = dir.join("out/trace.csv");
    let out = bin()
        .args(["compare", "--metric", "feas"])
        .arg(&trace)
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().ends_with(",spread"));
    let mut rows = 0;
    for line in lines {
        let spread: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        assert_eq!(spread, 0.0, "row: {line}");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn compare_names_the_missing_column() {
    let dir = scratch("cmp-miss");
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, small_config(&dir.join("out"), false)).unwrap();
    let out = bin().arg("solve").arg("--config").arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    // The plain nine-column trace has no opt_gap column.
    let trace = dir.join("out/trace.csv");
    let out = bin()
        .args(["compare", "--metric", "opt_gap"])
        .arg(&trace)
        .arg(&trace)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("lacks column `opt_gap`"), "{}", stderr_of(&out));
}

#[test]
fn config_with_two_problem_sources_is_rejected() {
    let dir = scratch("two-src");
    let cfg = r#"{
  "problem": {"Q": [[1.0]], "r": [0.0], "A": [[1.0]], "b": [0.5], "lower": [0.0], "upper": [1.0]},
  "generate": {"family": "uniform_qp", "n": 6, "m": 2, "seed": 4},
  "algo": "prox_alm",
  "params": {
    "penalty_weight": 10.0, "dual_stepsize": 2.5, "smoothing_factor": 0.5,
    "primal_stepsize": 0.01, "prox_weight": 30.0,
    "max_iter": 100, "stop_tol": 1e-8, "record_every": 10
  },
  "audits": {},
  "output_dir": "unused"
}"#;
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, cfg).unwrap();
    let out = bin().arg("solve").arg("--config").arg(&cfg_path).output().unwrap();
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("exactly one"), "{}", stderr_of(&out));
}

#[test]
fn unknown_preset_lists_the_available_ones() {
    let out = bin().args(["solve", "--preset", "bogus"]).output().unwrap();
    assert!(!out.status.success());
    let err = stderr_of(&out);
    for name in ["oscillation", "beta-sweep", "admm-compare"] {
        assert!(err.contains(name), "{err}");
    }
}
