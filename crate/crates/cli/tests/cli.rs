//! Black-box tests of the xlate binary: subcommand output and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xlate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlate"))
        .args(args)
        .output()
        .expect("run xlate")
}

fn write_corpus_task(corpus: &Path, task_id: &str, source: &str) {
    let dir = corpus.join(task_id);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("source.cpp"), source).unwrap();
    fs::write(dir.join("truth.cpp"), source).unwrap();
}

const PROGRAM: &str = r#"#include <iostream>
int main() {
    std::cout << "ok 1.5" << std::endl;
    return 0;
}
"#;

#[test]
fn score_output_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = dir.path().join("ref.txt");
    let cand_path = dir.path().join("cand.txt");
    fs::write(&ref_path, "b(50,50)= 0.00000000").unwrap();
    fs::write(&cand_path, "b(50,50)= 0.0").unwrap();
    let out = xlate(&[
        "score-output",
        "--ref",
        ref_path.to_str().unwrap(),
        "--cand",
        cand_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["jaro_winkler"], serde_json::json!(1.0));
}

#[test]
fn score_code_prints_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = dir.path().join("ref.cpp");
    let cand_path = dir.path().join("cand.cpp");
    fs::write(&ref_path, PROGRAM).unwrap();
    fs::write(&cand_path, PROGRAM).unwrap();
    let out = xlate(&[
        "score-code",
        "--ref",
        ref_path.to_str().unwrap(),
        "--cand",
        cand_path.to_str().unwrap(),
        "--lang",
        "cpp",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["codebleu"], serde_json::json!(1.0));
    assert_eq!(value["bias"], serde_json::json!(0.0));
}

#[test]
fn classify_errors_reports_primary_category() {
    let dir = tempfile::tempdir().unwrap();
    let stderr_path = dir.path().join("stderr.txt");
    fs::write(
        &stderr_path,
        "x.cpp:1:1: error: expected initializer before 'int'\n",
    )
    .unwrap();
    let out = xlate(&["classify-errors", "--stderr", stderr_path.to_str().unwrap()]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["primary"], serde_json::json!("Syntax"));
}

#[test]
fn classify_errors_strict_table_order_flag() {
    let dir = tempfile::tempdir().unwrap();
    let stderr_path = dir.path().join("stderr.txt");
    fs::write(
        &stderr_path,
        "x.cpp:1:1: error: invalid use of non-static member; did you delete it?\n",
    )
    .unwrap();
    let default = xlate(&["classify-errors", "--stderr", stderr_path.to_str().unwrap()]);
    assert!(default.status.success());
    let value: serde_json::Value = serde_json::from_slice(&default.stdout).unwrap();
    assert_eq!(value["primary"], serde_json::json!("Memory"));

    // Published table order puts Semantic's "invalid use of" first.
    let strict = xlate(&[
        "classify-errors",
        "--stderr",
        stderr_path.to_str().unwrap(),
        "--strict-table-order",
    ]);
    assert!(strict.status.success());
    let value: serde_json::Value = serde_json::from_slice(&strict.stdout).unwrap();
    assert_eq!(value["primary"], serde_json::json!("Semantic"));
}

#[test]
fn ingest_lists_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus_task(&corpus, "t1", PROGRAM);
    write_corpus_task(&corpus, "t2", PROGRAM);
    let out = xlate(&["ingest", "--corpus", corpus.to_str().unwrap()]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["tasks"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_config_exits_one() {
    let out = xlate(&["run", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_corpus_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty");
    fs::create_dir_all(&corpus).unwrap();
    let out = xlate(&["ingest", "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_emits_jsonl_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus_task(&corpus, "good", PROGRAM);
    write_corpus_task(&corpus, "bad", "int main( { this does not compile");
    let config_path = dir.path().join("config.toml");
    fs::write(
        &config_path,
        format!(
            r#"corpus = "{corpus}"
output_dir = "{out}"

[[endpoints]]
id = "e"
url = "http://localhost:1"

[[models]]
name = "m"
endpoint = "e"
trials_per_task = 1
"#,
            corpus = corpus.display(),
            out = dir.path().join("runs").display(),
        ),
    )
    .unwrap();
    let out = xlate(&[
        "validate",
        "--corpus",
        corpus.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let records: Vec<serde_json::Value> = stdout
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    let by_id = |id: &str| {
        records
            .iter()
            .find(|r| r["task_id"] == serde_json::json!(id))
            .unwrap()
    };
    assert_eq!(by_id("good")["admissible"], serde_json::json!(true));
    assert_eq!(by_id("bad")["admissible"], serde_json::json!(false));
}
