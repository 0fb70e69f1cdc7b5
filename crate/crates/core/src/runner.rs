//! End-to-end pipeline: prompt -> request -> extract -> score -> compile ->
//! classify -> execute -> output-compare, persisted trial by trial to an
//! append-only JSONL sink so long runs survive interruption and resume.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codebleu::{codebleu_score, CodeBleuWeights};
use crate::config::RunConfig;
use crate::corpus::{self, TranslationTask};
use crate::error::{HarnessError, Result};
use crate::exec::{self, CompileStatus, ExecStatus, ExecutionResult};
use crate::gateway::{extract_code, render_prompt, ExtractionStatus, Gateway};
use crate::similarity::output_similarity;
use crate::taxonomy::{classify_compile_failure, RuleSet};
use crate::trial::{TrialOutcome, TrialRecord};

pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub trials_written: usize,
    pub trials_skipped: usize,
    pub transport_failures: usize,
}

/// Counting semaphore bounding concurrent compile/execute slots.
struct Semaphore {
    permits: Mutex<usize>,
    condvar: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Semaphore {
        Semaphore {
            permits: Mutex::new(permits),
            condvar: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.condvar.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.semaphore.permits.lock().unwrap() += 1;
        self.semaphore.condvar.notify_one();
    }
}

/// Append-only, internally synchronized JSONL sink.
struct TrialSink {
    file: Mutex<File>,
}

impl TrialSink {
    fn open(path: &Path) -> Result<TrialSink> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        Ok(TrialSink {
            file: Mutex::new(file),
        })
    }

    fn append(&self, record: &TrialRecord) -> Result<()> {
        let line = serde_json::to_string(record)?;
        let mut file = self.file.lock().unwrap();
        writeln!(file, "{line}").map_err(|e| HarnessError::Infra(format!("trial sink: {e}")))?;
        file.flush()
            .map_err(|e| HarnessError::Infra(format!("trial sink: {e}")))?;
        Ok(())
    }
}

/// Read persisted trials, skipping corrupt lines. Returns records and the
/// number of skipped lines.
pub fn load_trials(path: &Path) -> Result<(Vec<TrialRecord>, usize)> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut records = Vec::new();
    let mut skipped = 0usize;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(&line) {
            Ok(record) => records.push(record),
            Err(e) => {
                log::warn!("skipping corrupt trial line: {e}");
                skipped += 1;
            }
        }
    }
    Ok((records, skipped))
}

#[derive(Clone)]
struct WorkItem {
    model_index: usize,
    task_id: String,
    trial_index: u32,
}

type ReferenceSlot = Arc<Mutex<Option<Option<Arc<ExecutionResult>>>>>;

struct ReferenceCache {
    entries: Mutex<BTreeMap<String, ReferenceSlot>>,
}

/// Run the full pipeline for every (model, admissible task, trial index).
/// Already-persisted trials are skipped, making the run resumable.
pub fn run_pipeline(config: &RunConfig, run_id: &str) -> Result<RunOutcome> {
    config.validate()?;
    let corpus = corpus::ingest_corpus(&config.corpus)?;
    let run_dir = config.output_dir.join(run_id);
    fs::create_dir_all(&run_dir).map_err(|e| HarnessError::io(&run_dir, e))?;

    let scratch = run_dir.join("validate");
    let validation = corpus::validate_ground_truth(&corpus, &config.toolchain, &scratch)?;
    let validation_path = run_dir.join("validation.jsonl");
    fs::write(&validation_path, validation.to_jsonl()?)
        .map_err(|e| HarnessError::io(&validation_path, e))?;
    let admissible: HashSet<String> = validation
        .admissible_ids()
        .into_iter()
        .map(str::to_string)
        .collect();
    if admissible.is_empty() {
        return Err(HarnessError::Corpus("no admissible tasks in corpus".into()));
    }

    let trials_path = run_dir.join("trials.jsonl");
    let mut done: HashSet<(String, String, u32)> = HashSet::new();
    if trials_path.exists() {
        let (existing, _) = load_trials(&trials_path)?;
        for record in existing {
            done.insert((record.model, record.task_id, record.trial_index));
        }
    }

    let template = config.prompt_template_text()?;
    // Fail early on a bad template rather than per trial.
    render_prompt(&template, "probe")?;

    let mut gateways: BTreeMap<String, Arc<Gateway>> = BTreeMap::new();
    for endpoint in &config.endpoints {
        gateways.insert(
            endpoint.id.clone(),
            Arc::new(Gateway::new(
                endpoint.clone(),
                config.transcripts_dir.clone(),
            )?),
        );
    }

    let mut work: Vec<WorkItem> = Vec::new();
    for (model_index, model) in config.models.iter().enumerate() {
        for task in corpus
            .tasks
            .iter()
            .filter(|t| admissible.contains(&t.task_id))
        {
            for trial_index in 0..model.effective_trials() {
                let key = (model.name.clone(), task.task_id.clone(), trial_index);
                if done.contains(&key) {
                    continue;
                }
                work.push(WorkItem {
                    model_index,
                    task_id: task.task_id.clone(),
                    trial_index,
                });
            }
        }
    }
    let skipped = done.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    work.shuffle(&mut rng);

    let sink = Arc::new(TrialSink::open(&trials_path)?);
    let compile_slots = Arc::new(Semaphore::new(config.compile_workers));
    let reference_cache = Arc::new(ReferenceCache {
        entries: Mutex::new(BTreeMap::new()),
    });
    let queue = Arc::new(Mutex::new(work));
    let transport_failures = Arc::new(Mutex::new(0usize));
    let written = Arc::new(Mutex::new(0usize));
    let rules = Arc::new(RuleSet::default_rules());

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for _ in 0..config.workers {
            let queue = Arc::clone(&queue);
            let sink = Arc::clone(&sink);
            let compile_slots = Arc::clone(&compile_slots);
            let reference_cache = Arc::clone(&reference_cache);
            let transport_failures = Arc::clone(&transport_failures);
            let written = Arc::clone(&written);
            let rules = Arc::clone(&rules);
            let gateways = &gateways;
            let corpus = &corpus;
            let template = &template;
            let run_dir = &run_dir;
            handles.push(scope.spawn(move || -> Result<()> {
                loop {
                    let item = {
                        let mut queue = queue.lock().unwrap();
                        match queue.pop() {
                            Some(item) => item,
                            None => return Ok(()),
                        }
                    };
                    let model = &config.models[item.model_index];
                    let task = corpus.task(&item.task_id).expect("task exists");
                    let gateway = &gateways[&model.endpoint];
                    let record = run_trial(
                        run_id,
                        config,
                        model_name(config, item.model_index),
                        model,
                        task,
                        item.trial_index,
                        gateway,
                        template,
                        &rules,
                        &compile_slots,
                        &reference_cache,
                        run_dir,
                    )?;
                    if record.outcome == TrialOutcome::TransportFailed {
                        *transport_failures.lock().unwrap() += 1;
                    }
                    sink.append(&record)?;
                    *written.lock().unwrap() += 1;
                }
            }));
        }
        for handle in handles {
            handle.join().expect("worker panicked")?;
        }
        Ok(())
    })?;

    let trials_written = *written.lock().unwrap();
    let transport_failures = *transport_failures.lock().unwrap();
    Ok(RunOutcome {
        run_dir,
        trials_written,
        trials_skipped: skipped,
        transport_failures,
    })
}

fn model_name(config: &RunConfig, index: usize) -> &str {
    &config.models[index].name
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    run_id: &str,
    config: &RunConfig,
    model_name: &str,
    model: &crate::config::ModelConfig,
    task: &TranslationTask,
    trial_index: u32,
    gateway: &Gateway,
    template: &str,
    rules: &RuleSet,
    compile_slots: &Semaphore,
    reference_cache: &ReferenceCache,
    run_dir: &Path,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let mut record = TrialRecord {
        run_id: run_id.to_string(),
        model: model_name.to_string(),
        task_id: task.task_id.clone(),
        trial_index,
        outcome: TrialOutcome::TransportFailed,
        transport_error: None,
        completion: None,
        extraction: None,
        score: None,
        compile: None,
        error_category: None,
        error_categories: None,
        execution: None,
        output_comparison: None,
        total_ms: 0,
    };

    let prompt = render_prompt(template, &task.source_code)?;
    let sampling = model.effective_sampling();
    let completion = match gateway.request_translation(
        model_name,
        &task.task_id,
        &prompt,
        &sampling,
        trial_index,
    ) {
        Ok(completion) => completion,
        Err(HarnessError::Transport { attempts, message }) => {
            record.transport_error = Some(format!("{message} (after {attempts} attempts)"));
            record.total_ms = start.elapsed().as_millis() as u64;
            return Ok(record);
        }
        Err(other) => return Err(other),
    };

    let extraction = extract_code(&completion.completion_text, task.target_lang);
    record.completion = Some(completion);
    let candidate = match (&extraction.status, extraction.code.clone()) {
        (ExtractionStatus::Extracted, Some(code)) => code,
        _ => {
            record.extraction = Some(extraction);
            record.outcome = TrialOutcome::ExtractionFailed;
            record.total_ms = start.elapsed().as_millis() as u64;
            return Ok(record);
        }
    };
    record.extraction = Some(extraction);

    record.score = Some(codebleu_score(
        &task.ground_truth_code,
        &candidate,
        task.target_lang,
        CodeBleuWeights::default(),
    )?);

    let trial_dir = run_dir
        .join(sanitize_component(model_name))
        .join(sanitize_component(&task.task_id))
        .join(trial_index.to_string());
    let compile_result = {
        let _slot = compile_slots.acquire();
        exec::compile(&candidate, task.target_lang, &config.toolchain, &trial_dir)?
    };
    if compile_result.status != CompileStatus::Success {
        let classification = classify_compile_failure(&compile_result, rules);
        record.error_category = Some(classification.primary);
        record.error_categories = Some(classification.all);
        record.compile = Some(compile_result);
        record.outcome = TrialOutcome::CompileFailed;
        record.total_ms = start.elapsed().as_millis() as u64;
        return Ok(record);
    }
    let artifact = compile_result
        .artifact_path
        .clone()
        .expect("success has artifact");
    record.compile = Some(compile_result);
    record.outcome = TrialOutcome::Compiled;

    let execution = {
        let _slot = compile_slots.acquire();
        exec::execute(&artifact, task.stdin_fixture.as_deref(), &config.toolchain)?
    };

    // Reference output comes from the original source program, compiled and
    // executed once per task and cached.
    let reference = reference_output(config, task, reference_cache, run_dir, compile_slots)?;
    if execution.status == ExecStatus::Completed {
        if let Some(reference) = &reference {
            if reference.status == ExecStatus::Completed {
                record.output_comparison = Some(output_similarity(
                    &reference.stdout_text,
                    &execution.stdout_text,
                ));
            }
        }
    }
    record.execution = Some(execution);
    record.total_ms = start.elapsed().as_millis() as u64;
    Ok(record)
}

fn reference_output(
    config: &RunConfig,
    task: &TranslationTask,
    cache: &ReferenceCache,
    run_dir: &Path,
    compile_slots: &Semaphore,
) -> Result<Option<Arc<ExecutionResult>>> {
    // Per-task slot lock so the reference is compiled and executed exactly
    // once even when trials for the same task run concurrently.
    let slot = {
        let mut entries = cache.entries.lock().unwrap();
        entries
            .entry(task.task_id.clone())
            .or_insert_with(|| Arc::new(Mutex::new(None)))
            .clone()
    };
    let mut guard = slot.lock().unwrap();
    if let Some(cached) = &*guard {
        return Ok(cached.clone());
    }
    let reference_dir = run_dir
        .join("reference")
        .join(sanitize_component(&task.task_id));
    let computed = {
        let _slot = compile_slots.acquire();
        let compiled = exec::compile(
            &task.source_code,
            task.source_lang,
            &config.toolchain,
            &reference_dir,
        )?;
        match compiled.artifact_path {
            Some(artifact) => Some(Arc::new(exec::execute(
                &artifact,
                task.stdin_fixture.as_deref(),
                &config.toolchain,
            )?)),
            None => None,
        }
    };
    *guard = Some(computed.clone());
    Ok(computed)
}

fn sanitize_component(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
