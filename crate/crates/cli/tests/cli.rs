use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treemeasure")).args(args).env_remove("TREEMEASURE_THREADS").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn measure_all_accept() {
    let out = run(&["measure", &corpus("all_accept.aut")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "measure = 1 (exact fixpoint)");
}

#[test]
fn measure_all_reject() {
    let out = run(&["measure", &corpus("all_reject.aut")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "measure = 0 (exact fixpoint)");
}

#[test]
fn compare_reach_above_half() {
    let out = run(&["compare", &corpus("reach.aut"), "1/2", "--rel", "gt", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "GT");
}

#[test]
fn compare_safety_half_is_undecided() {
    let out = run(&["compare", &corpus("safety_half.aut"), "1/2", "--rel", "eq", "--budget", "40"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.starts_with("UNKNOWN (interval [0, 0.5"), "{text}");
    assert!(text.contains("emit-formula"), "{text}");
}

#[test]
fn compare_decides_below() {
    let out = run(&["compare", &corpus("safety_half.aut"), "0.6", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "LT");
}

#[test]
fn threshold_outside_unit_interval() {
    let out = run(&["compare", &corpus("reach.aut"), "3/2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside"));
}

#[test]
fn missing_file_and_usage_errors() {
    assert_eq!(run(&["measure", "/nonexistent.aut"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["measure", &corpus("reach.aut"), "--budget", "0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_rejects_non_weak() {
    assert_eq!(run(&["validate", &corpus("reach.aut")]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.aut");
    let text = std::fs::read_to_string(corpus("reach.aut")).unwrap();
    std::fs::write(&path, text.replace("priority: q_r 1 q_acc 0", "priority: q_r 1 q_acc 2")).unwrap();
    let out = run(&["validate", path.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["weak"], false);
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
    assert_eq!(run(&["measure", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn measure_json_is_parseable() {
    let out = run(&["measure", &corpus("reach.aut"), "--budget", "5", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        vec!["enclose", "corpus:safety_half.aut", "--budget", "12"],
        vec!["emit-formula", "corpus:reach.aut"],
        vec!["oracle", "sample", "corpus:reach.aut", "--samples", "500", "--depth", "8", "--seed", "3"],
    ] {
        let args: Vec<String> =
            args.iter().map(|a| a.strip_prefix("corpus:").map(corpus).unwrap_or_else(|| a.to_string())).collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["oracle", "sample", &corpus("safety_half.aut"), "--samples", "800", "--depth", "8"];
    let one = Command::new(env!("CARGO_BIN_EXE_treemeasure")).args(args).env("TREEMEASURE_THREADS", "1").output().unwrap();
    let many = run(&args);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_treemeasure")).args(args).env("TREEMEASURE_THREADS", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn emit_formula_to_file_with_stats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.smt2");
    let out = run(&[
        "emit-formula",
        &corpus("reach.aut"),
        "--compare",
        "1/2",
        "--rel",
        "gt",
        "--stats",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["blocks"], 4);
    let smt = std::fs::read_to_string(&path).unwrap();
    assert_eq!(stats["bytes"].as_u64().unwrap() as usize, smt.len());
    assert!(smt.ends_with("(check-sat)\n"), "{smt}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("z3"));
}

#[test]
fn emit_formula_size_guard() {
    let out = run(&["emit-formula", &corpus("reach.aut"), "--max-atoms", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn oracle_enum_matches_operator() {
    let out = run(&["oracle", "enum", &corpus("reach.aut"), "--steps", "2", "--base", "empty", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["agrees_with_operator"], true);
    assert_eq!(run(&["oracle", "enum", &corpus("reach.aut"), "--steps", "4"]).status.code(), Some(1));
}

#[test]
fn branching_process_measure() {
    let out = run(&["measure", &corpus("reach.aut"), "--process", &corpus("dirac_a.proc")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "measure = 1 (exact fixpoint)");
}
