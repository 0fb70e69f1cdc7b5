//! End-to-end pipeline tests against a mock chat-completions endpoint.
//! Corpora use C++ on both sides so only a C++ compiler is required.

mod common;

use std::fs;
use std::path::Path;

use common::{completion_json, MockServer};
use xlate_core::config::{EndpointConfig, ModelConfig, RunConfig, SamplingConfig};
use xlate_core::report::emit_report;
use xlate_core::runner::{load_trials, run_pipeline};
use xlate_core::{Lang, ToolchainConfig, TrialOutcome};

const ALPHA_SOURCE: &str = r#"#include <iostream>
// TASK_ALPHA
int main() {
    std::cout << "alpha 1.5" << std::endl;
    return 0;
}
"#;

const BETA_SOURCE: &str = r#"#include <iostream>
// TASK_BETA
int main() {
    std::cout << "beta 2.5" << std::endl;
    return 0;
}
"#;

const GOOD_BETA_CANDIDATE: &str = r#"#include <iostream>
int main() {
    std::cout << "beta 2.50" << std::endl;
    return 0;
}
"#;

const BROKEN_CANDIDATE: &str = r#"#include <iostream>
int main( {
    std::cout << "broken" << std::endl
}
"#;

fn write_task(corpus: &Path, task_id: &str, source: &str) {
    let dir = corpus.join(task_id);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("source.cpp"), source).unwrap();
    fs::write(dir.join("truth.cpp"), source).unwrap();
}

fn sampling() -> SamplingConfig {
    SamplingConfig {
        temperature: 0.8,
        top_p: 0.95,
        min_p: None,
        max_new_tokens: 512,
        context_length: None,
        seed: None,
    }
}

fn config(corpus: &Path, output: &Path, url: &str, trials: u32) -> RunConfig {
    RunConfig {
        corpus: corpus.to_path_buf(),
        output_dir: output.to_path_buf(),
        workers: 2,
        compile_workers: 2,
        seed: 7,
        prompt_template: None,
        target_lang: Lang::Cpp,
        transcripts_dir: None,
        endpoints: vec![EndpointConfig {
            id: "mock".into(),
            url: url.into(),
            api_key_env: None,
            rate_limit_rpm: None,
            max_retries: 5,
            retry_base_ms: 1,
            request_timeout_secs: 10,
        }],
        models: vec![ModelConfig {
            name: "mock-model".into(),
            endpoint: "mock".into(),
            profile: None,
            sampling: Some(sampling()),
            trials_per_task: Some(trials),
        }],
        toolchain: ToolchainConfig::default(),
    }
}

/// Fenced completion keyed on which task's source appears in the request.
fn split_handler(body: &str, _hit: usize) -> (u16, String) {
    let code = if body.contains("TASK_ALPHA") {
        BROKEN_CANDIDATE
    } else {
        GOOD_BETA_CANDIDATE
    };
    (200, completion_json(&format!("```cpp\n{code}```\n")))
}

#[test]
fn six_trials_two_tasks_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_task(&corpus, "alpha", ALPHA_SOURCE);
    write_task(&corpus, "beta", BETA_SOURCE);
    let server = MockServer::start(split_handler);
    let cfg = config(&corpus, &dir.path().join("runs"), &server.url(), 3);

    let outcome = run_pipeline(&cfg, "run1").unwrap();
    assert_eq!(outcome.trials_written, 6);
    assert_eq!(outcome.transport_failures, 0);

    let (trials, corrupt) = load_trials(&outcome.run_dir.join("trials.jsonl")).unwrap();
    assert_eq!(trials.len(), 6);
    assert_eq!(corrupt, 0);
    for trial in &trials {
        assert_eq!(trial.stage_ordering_violation(), None);
    }

    let artifacts = emit_report(&outcome.run_dir, false).unwrap();
    assert!(outcome.run_dir.join("report.json").exists());
    let model = &artifacts.report.aggregate.models["mock-model"];
    // Alpha never compiles, beta always does: accuracy is exactly 0.5.
    assert_eq!(model.compilation_accuracy, Some(0.5));

    // Beta candidates print the same normalized output as the source program.
    for trial in trials.iter().filter(|t| t.task_id == "beta") {
        assert_eq!(trial.outcome, TrialOutcome::Compiled);
        let comparison = trial.output_comparison.as_ref().unwrap();
        assert!((comparison.jaro_winkler - 1.0).abs() < 1e-12);
    }
    for trial in trials.iter().filter(|t| t.task_id == "alpha") {
        assert_eq!(trial.outcome, TrialOutcome::CompileFailed);
        assert!(trial.error_category.is_some());
    }
}

#[test]
fn resume_skips_persisted_trials_and_report_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_task(&corpus, "alpha", ALPHA_SOURCE);
    write_task(&corpus, "beta", BETA_SOURCE);
    let server = MockServer::start(split_handler);
    let cfg = config(&corpus, &dir.path().join("runs"), &server.url(), 3);

    let first = run_pipeline(&cfg, "run1").unwrap();
    emit_report(&first.run_dir, false).unwrap();
    let report_path = first.run_dir.join("report.json");
    let before = fs::read(&report_path).unwrap();
    fs::remove_file(&report_path).unwrap();

    let second = run_pipeline(&cfg, "run1").unwrap();
    assert_eq!(second.trials_written, 0);
    assert_eq!(second.trials_skipped, 6);
    emit_report(&second.run_dir, false).unwrap();
    let after = fs::read(&report_path).unwrap();
    assert_eq!(before, after);
}

#[test]
fn two_fresh_runs_produce_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_task(&corpus, "alpha", ALPHA_SOURCE);
    write_task(&corpus, "beta", BETA_SOURCE);
    let server = MockServer::start(split_handler);

    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let cfg = config(
            &corpus,
            &dir.path().join(format!("runs-{run}")),
            &server.url(),
            2,
        );
        let outcome = run_pipeline(&cfg, "run").unwrap();
        emit_report(&outcome.run_dir, false).unwrap();
        reports.push(fs::read(outcome.run_dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn permanently_down_endpoint_records_transport_failures() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_task(&corpus, "beta", BETA_SOURCE);
    let server = MockServer::start(|_, _| (500, "{}".into()));
    let mut cfg = config(&corpus, &dir.path().join("runs"), &server.url(), 2);
    cfg.endpoints[0].max_retries = 0;

    let outcome = run_pipeline(&cfg, "run1").unwrap();
    assert_eq!(outcome.trials_written, 2);
    assert_eq!(outcome.transport_failures, 2);
    let (trials, _) = load_trials(&outcome.run_dir.join("trials.jsonl")).unwrap();
    for trial in &trials {
        assert_eq!(trial.outcome, TrialOutcome::TransportFailed);
        assert!(trial.transport_error.is_some());
        assert_eq!(trial.stage_ordering_violation(), None);
    }
}

#[test]
fn transient_429s_are_retried_to_success() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_task(&corpus, "beta", BETA_SOURCE);
    // First two requests are rate-limited, then the endpoint recovers.
    let server = MockServer::start(|body, hit| {
        if hit < 2 {
            (429, "{}".into())
        } else {
            split_handler(body, hit)
        }
    });
    let cfg = config(&corpus, &dir.path().join("runs"), &server.url(), 1);

    let outcome = run_pipeline(&cfg, "run1").unwrap();
    assert_eq!(outcome.transport_failures, 0);
    assert!(server.hits() >= 3);
    let (trials, _) = load_trials(&outcome.run_dir.join("trials.jsonl")).unwrap();
    assert_eq!(trials.len(), 1);
    assert_eq!(trials[0].outcome, TrialOutcome::Compiled);
    assert!(trials[0].completion.as_ref().unwrap().retries >= 2);
}

#[test]
fn unfenced_prose_reply_is_an_extraction_failure() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_task(&corpus, "beta", BETA_SOURCE);
    let server = MockServer::start(|_, _| {
        (
            200,
            completion_json("I am sorry, I cannot translate that program."),
        )
    });
    let cfg = config(&corpus, &dir.path().join("runs"), &server.url(), 1);

    let outcome = run_pipeline(&cfg, "run1").unwrap();
    let (trials, _) = load_trials(&outcome.run_dir.join("trials.jsonl")).unwrap();
    assert_eq!(trials[0].outcome, TrialOutcome::ExtractionFailed);
    assert!(trials[0].score.is_none());
    assert!(trials[0].compile.is_none());
}
