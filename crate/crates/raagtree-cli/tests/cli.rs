//! End-to-end checks of the command-line surface.

use std::process::{Command, Output};

fn raagtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raagtree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_lines(output: &Output) -> Vec<String> {
    String::from_utf8_lossy(&output.stdout)
        .lines()
        .map(str::to_string)
        .collect()
}

fn json_lines(output: &Output) -> Vec<serde_json::Value> {
    stdout_lines(output)
        .iter()
        .map(|line| serde_json::from_str(line).expect("json line"))
        .collect()
}

fn write_temp(name: &str, contents: &str) -> String {
    let path = std::env::temp_dir().join(name);
    std::fs::write(&path, contents).expect("temp file writes");
    path.to_string_lossy().into_owned()
}

#[test]
fn constants_prints_quoted_decimals() {
    let out = raagtree(&["--no-timestamp", "constants", "--digits", "8"]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[0]["subcommand"], "constants");
    assert_eq!(lines[1]["name"], "c3");
    assert_eq!(lines[1]["decimal"], "0.35219924");
    assert_eq!(lines[2]["decimal"], "2.06967481");
    assert_eq!(lines[3]["decimal"], "0.69220063");
}

#[test]
fn invariants_on_path_seven() {
    let path = write_temp("raagtree-path7.txt", "7\n1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n");
    let out = raagtree(&["--no-timestamp", "invariants", "--input", &path]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[1]["n"], 7);
    assert_eq!(lines[1]["deep"], serde_json::json!([4]));
    assert_eq!(lines[1]["upsilon"], 2);
    assert_eq!(lines[1]["shallow"], false);
    assert_eq!(lines[1]["betti_lower_bound"], 2);
}

#[test]
fn prufer_input_format() {
    let path = write_temp("raagtree-prufer.txt", "prufer: 2 3 4 5 6\n");
    let out = raagtree(&["--no-timestamp", "invariants", "--input", &path]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[1]["n"], 7);
    assert_eq!(lines[1]["upsilon"], 2);
}

#[test]
fn enumerate_exact_rational() {
    let out = raagtree(&[
        "--no-timestamp",
        "enumerate",
        "--n",
        "7",
        "--stat",
        "deep-fraction",
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[1]["mode"], "exhaustive");
    // 2520 / 7^6 in lowest terms
    assert_eq!(lines[1]["value"], "360/16807");
    assert!(lines[1].get("stderr").is_none());
}

#[test]
fn sample_is_reproducible_and_seed_sensitive() {
    let args = [
        "--no-timestamp",
        "sample",
        "--n",
        "6",
        "--stat",
        "upsilon-per-node",
        "--samples",
        "4000",
        "--seed",
        "11",
    ];
    let a = raagtree(&args);
    let b = raagtree(&args);
    assert_eq!(a.stdout, b.stdout, "identical config gives identical bytes");
    let mut changed = args;
    changed[9] = "12";
    let c = raagtree(&changed);
    assert_ne!(a.stdout, c.stdout);
    let lines = json_lines(&a);
    assert_eq!(lines[1]["mode"], "montecarlo");
    assert_eq!(lines[1]["samples"], 4000);
    assert_eq!(lines[1]["seed"], 11);
    assert!(lines[1]["ci95"].is_array());
}

#[test]
fn exact_psi_coefficient_count() {
    let out = raagtree(&[
        "--no-timestamp",
        "exact",
        "--n",
        "8",
        "--stat",
        "psi-coef",
        "--k",
        "3",
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[1]["count"], "655536");
    assert_eq!(lines[1]["rational"], "1951/120");
}

#[test]
fn exact_accepts_both_spellings() {
    for stat in ["prob-deep-root", "prob-root-deep"] {
        let out = raagtree(&["--no-timestamp", "exact", "--n", "4", "--stat", stat]);
        assert!(out.status.success());
        let lines = json_lines(&out);
        assert_eq!(lines[1]["rational"], "3/8");
    }
}

#[test]
fn betti_reports_counts_and_matrix() {
    let tree_path = write_temp("raagtree-path3.txt", "3\n1 2\n2 3\n");
    let matrix_path = write_temp("raagtree-matrix.txt", "");
    let out = raagtree(&[
        "--no-timestamp",
        "betti",
        "--input",
        &tree_path,
        "--emit-matrix",
        &matrix_path,
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[1]["generators"], 31);
    assert_eq!(lines[2]["b1"], 0);
    assert_eq!(lines[2]["upsilon"], 0);
    let matrix = std::fs::read_to_string(&matrix_path).unwrap();
    let header = matrix.lines().next().unwrap();
    let parts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(parts[1], 31, "column count is the generator count");
    for line in matrix.lines().skip(1) {
        assert_eq!(line.split_whitespace().count(), 3, "triplet rows");
    }
}

#[test]
fn betti_budget_exit() {
    let tree_path = write_temp("raagtree-path7b.txt", "7\n1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n");
    let out = raagtree(&["--no-timestamp", "betti", "--input", &tree_path]);
    assert!(!out.status.success(), "default budget rejects n = 7");
    let out = raagtree(&[
        "--no-timestamp",
        "betti",
        "--input",
        &tree_path,
        "--max-nodes",
        "7",
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[2]["b1"], 10);
    assert_eq!(lines[2]["upsilon"], 2);
}

#[test]
fn env_budget_override() {
    let tree_path = write_temp("raagtree-path7c.txt", "7\n1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n");
    let out = Command::new(env!("CARGO_BIN_EXE_raagtree"))
        .env("RAAGTREE_BUDGET", "7")
        .args(["--no-timestamp", "betti", "--input", &tree_path])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "env override raises the budget");
}

#[test]
fn verify_enumeration_suite_exit_zero() {
    let out = raagtree(&[
        "--no-timestamp",
        "--format",
        "text",
        "verify",
        "--suite",
        "enumeration",
        "--max-n",
        "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS enumeration.cayley-counts"));
    assert!(text.contains("PASS enumeration.bridge-identity"));
}

#[test]
fn verify_all_reduced_exit_zero() {
    // the full suite wiring at reduced sizes; the acceptance tests run the
    // per-suite checks at their contractual scales
    let out = raagtree(&[
        "--no-timestamp",
        "verify",
        "--suite",
        "all",
        "--max-n",
        "4",
        "--mc-runs",
        "5",
        "--mc-samples",
        "4000",
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    let summary = lines.last().unwrap();
    assert_eq!(summary["passed"], summary["total"]);
    let out = raagtree(&["--no-timestamp", "verify", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_error_exit_two() {
    let out = raagtree(&["enumerate", "--n", "7"]);
    assert_eq!(out.status.code(), Some(2), "missing --stat is a usage error");
    let out = raagtree(&["--no-timestamp", "enumerate", "--n", "7", "--stat", "bogus"]);
    assert_eq!(out.status.code(), Some(2), "unknown statistic");
}

#[test]
fn csv_format_for_statistics() {
    let out = raagtree(&[
        "--no-timestamp",
        "--format",
        "csv",
        "enumerate",
        "--n",
        "6",
        "--stat",
        "prob-root-deep",
    ]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert!(lines[0].starts_with("# config:"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "prob-root-deep");
    assert_eq!(fields[1], "6");
    assert_eq!(fields[2], "exhaustive");
}
