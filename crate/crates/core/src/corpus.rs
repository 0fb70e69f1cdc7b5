//! Paired-program corpus: one directory per task holding a legacy source
//! file and a human-written ground-truth translation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::exec::{self, CompileResult, CompileStatus, ToolchainConfig};
use crate::lang::Lang;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslationTask {
    pub task_id: String,
    pub source_code: String,
    pub ground_truth_code: String,
    pub source_lang: Lang,
    pub target_lang: Lang,
    pub dataset_tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stdin_fixture: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    /// Sorted by task_id; iteration order is deterministic.
    pub tasks: Vec<TranslationTask>,
    pub root_path: PathBuf,
    /// Task directories that were skipped, with the reason.
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn task(&self, task_id: &str) -> Option<&TranslationTask> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }
}

fn find_by_stem(dir: &Path, stem: &str) -> Result<Option<PathBuf>> {
    let mut matches = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let entry = entry.map_err(|e| HarnessError::io(dir, e))?;
        let path = entry.path();
        if path.is_file()
            && path.file_stem().and_then(|s| s.to_str()) == Some(stem)
            && path.extension().is_some()
        {
            matches.push(path);
        }
    }
    matches.sort();
    Ok(matches.into_iter().next())
}

/// Load a corpus from disk. Layout: `root/{task_id}/source.*` plus
/// `root/{task_id}/truth.*`, optional `stdin.txt`. Tasks missing either half
/// are excluded with a warning; duplicate task ids are fatal.
pub fn ingest_corpus(root_path: &Path) -> Result<Corpus> {
    let entries = fs::read_dir(root_path).map_err(|e| HarnessError::io(root_path, e))?;
    let mut dirs: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| HarnessError::io(root_path, e))?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();

    let mut tasks = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    for dir in dirs {
        let raw_name = match dir.file_name().and_then(|n| n.to_str()) {
            Some(name) => name.to_string(),
            None => {
                warnings.push(format!(
                    "{}: non-UTF8 directory name, skipped",
                    dir.display()
                ));
                continue;
            }
        };
        let task_id = raw_name.trim().to_string();
        let normalized = task_id.to_lowercase();
        if let Some(previous) = seen.get(&normalized) {
            return Err(HarnessError::Corpus(format!(
                "duplicate task_id: '{task_id}' and '{previous}' normalize to the same id"
            )));
        }
        seen.insert(normalized, task_id.clone());

        let source_path = find_by_stem(&dir, "source")?;
        let truth_path = find_by_stem(&dir, "truth")?;
        let (source_path, truth_path) = match (source_path, truth_path) {
            (Some(s), Some(t)) => (s, t),
            (None, _) => {
                warnings.push(format!("{task_id}: no source.* file, task excluded"));
                continue;
            }
            (_, None) => {
                warnings.push(format!("{task_id}: no truth.* file, task excluded"));
                continue;
            }
        };
        let lang_of = |path: &Path| -> Option<Lang> {
            path.extension()
                .and_then(|e| e.to_str())
                .and_then(Lang::from_extension)
        };
        let (source_lang, target_lang) = match (lang_of(&source_path), lang_of(&truth_path)) {
            (Some(s), Some(t)) => (s, t),
            _ => {
                warnings.push(format!(
                    "{task_id}: unrecognized source/truth file extension, task excluded"
                ));
                continue;
            }
        };
        let source_code =
            fs::read_to_string(&source_path).map_err(|e| HarnessError::io(&source_path, e))?;
        let ground_truth_code =
            fs::read_to_string(&truth_path).map_err(|e| HarnessError::io(&truth_path, e))?;
        if source_code.trim().is_empty() || ground_truth_code.trim().is_empty() {
            warnings.push(format!("{task_id}: empty program file, task excluded"));
            continue;
        }
        let stdin_path = dir.join("stdin.txt");
        let stdin_fixture = if stdin_path.is_file() {
            Some(fs::read_to_string(&stdin_path).map_err(|e| HarnessError::io(&stdin_path, e))?)
        } else {
            None
        };
        let dataset_tag = fs::read_to_string(dir.join("dataset.txt"))
            .map(|s| s.trim().to_string())
            .unwrap_or_default();
        tasks.push(TranslationTask {
            task_id,
            source_code,
            ground_truth_code,
            source_lang,
            target_lang,
            dataset_tag,
            stdin_fixture,
        });
    }
    if tasks.is_empty() {
        return Err(HarnessError::Corpus(format!(
            "empty corpus: no valid tasks under {}",
            root_path.display()
        )));
    }
    tasks.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    Ok(Corpus {
        tasks,
        root_path: root_path.to_path_buf(),
        warnings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskValidation {
    pub task_id: String,
    pub source_compiles: bool,
    pub truth_compiles: bool,
    pub admissible: bool,
    pub diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_result: Option<CompileResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_result: Option<CompileResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tasks: Vec<TaskValidation>,
}

impl ValidationReport {
    pub fn admissible_ids(&self) -> Vec<&str> {
        self.tasks
            .iter()
            .filter(|t| t.admissible)
            .map(|t| t.task_id.as_str())
            .collect()
    }

    /// One JSON record per task, newline-separated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for task in &self.tasks {
            let record = serde_json::json!({
                "task_id": task.task_id,
                "source_compiles": task.source_compiles,
                "truth_compiles": task.truth_compiles,
                "admissible": task.admissible,
                "diagnostics": task.diagnostics,
            });
            out.push_str(&serde_json::to_string(&record)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Corpus admission check: both halves of every task must compile.
pub fn validate_ground_truth(
    corpus: &Corpus,
    toolchain: &ToolchainConfig,
    scratch_dir: &Path,
) -> Result<ValidationReport> {
    if corpus.tasks.is_empty() {
        return Err(HarnessError::Corpus(
            "cannot validate an empty corpus".into(),
        ));
    }
    let mut tasks = Vec::new();
    for task in &corpus.tasks {
        let source_dir = scratch_dir.join(&task.task_id).join("source");
        let truth_dir = scratch_dir.join(&task.task_id).join("truth");
        let source_result =
            exec::compile(&task.source_code, task.source_lang, toolchain, &source_dir)?;
        let truth_result = exec::compile(
            &task.ground_truth_code,
            task.target_lang,
            toolchain,
            &truth_dir,
        )?;
        let source_compiles = source_result.status == CompileStatus::Success;
        let truth_compiles = truth_result.status == CompileStatus::Success;
        let mut diagnostics = Vec::new();
        if !source_compiles {
            diagnostics.push(format!(
                "source: {}",
                first_line(&source_result.stderr_text)
            ));
        }
        if !truth_compiles {
            diagnostics.push(format!("truth: {}", first_line(&truth_result.stderr_text)));
        }
        tasks.push(TaskValidation {
            task_id: task.task_id.clone(),
            source_compiles,
            truth_compiles,
            admissible: source_compiles && truth_compiles,
            diagnostics,
            source_result: if source_compiles {
                None
            } else {
                Some(source_result)
            },
            truth_result: if truth_compiles {
                None
            } else {
                Some(truth_result)
            },
        });
    }
    Ok(ValidationReport { tasks })
}

fn first_line(text: &str) -> &str {
    text.lines().next().unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_task(root: &Path, id: &str, source: Option<&str>, truth: Option<&str>) {
        let dir = root.join(id);
        fs::create_dir_all(&dir).unwrap();
        if let Some(code) = source {
            fs::write(dir.join("source.f90"), code).unwrap();
        }
        if let Some(code) = truth {
            fs::write(dir.join("truth.cpp"), code).unwrap();
        }
    }

    #[test]
    fn loads_paired_tasks_in_sorted_order() {
        let root = tempfile::tempdir().unwrap();
        write_task(
            root.path(),
            "sort",
            Some("print *, 2"),
            Some("int main(){}"),
        );
        write_task(root.path(), "fib", Some("print *, 1"), Some("int main(){}"));
        let corpus = ingest_corpus(root.path()).unwrap();
        let ids: Vec<&str> = corpus.tasks.iter().map(|t| t.task_id.as_str()).collect();
        assert_eq!(ids, vec!["fib", "sort"]);
        assert_eq!(corpus.tasks[0].source_lang, Lang::Fortran);
        assert_eq!(corpus.tasks[0].target_lang, Lang::Cpp);
    }

    #[test]
    fn task_missing_truth_is_excluded_with_warning() {
        let root = tempfile::tempdir().unwrap();
        write_task(root.path(), "ok", Some("print *, 1"), Some("int main(){}"));
        write_task(root.path(), "halfpair", Some("print *, 1"), None);
        let corpus = ingest_corpus(root.path()).unwrap();
        assert_eq!(corpus.tasks.len(), 1);
        assert!(corpus.warnings.iter().any(|w| w.contains("halfpair")));
    }

    #[test]
    fn duplicate_normalized_ids_are_fatal() {
        let root = tempfile::tempdir().unwrap();
        write_task(root.path(), "Fib", Some("x"), Some("y"));
        write_task(root.path(), "fib", Some("x"), Some("y"));
        let err = ingest_corpus(root.path()).unwrap_err();
        assert!(matches!(err, HarnessError::Corpus(_)), "{err}");
    }

    #[test]
    fn empty_corpus_is_fatal() {
        let root = tempfile::tempdir().unwrap();
        let err = ingest_corpus(root.path()).unwrap_err();
        assert!(err.to_string().contains("empty corpus"));
    }

    #[test]
    fn ingest_is_deterministic() {
        let root = tempfile::tempdir().unwrap();
        write_task(root.path(), "a", Some("print *, 1"), Some("int main(){}"));
        write_task(root.path(), "b", Some("print *, 2"), Some("int main(){}"));
        let c1 = serde_json::to_string(&ingest_corpus(root.path()).unwrap()).unwrap();
        let c2 = serde_json::to_string(&ingest_corpus(root.path()).unwrap()).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn stdin_fixture_is_picked_up() {
        let root = tempfile::tempdir().unwrap();
        write_task(root.path(), "t", Some("read *, n"), Some("int main(){}"));
        fs::write(root.path().join("t").join("stdin.txt"), "5\n").unwrap();
        let corpus = ingest_corpus(root.path()).unwrap();
        assert_eq!(corpus.tasks[0].stdin_fixture.as_deref(), Some("5\n"));
    }

    // Validation tests use C++ on both halves so they run without a Fortran
    // compiler on the test machine.
    fn cpp_pair_corpus(root: &Path, truth_code: &str) -> Corpus {
        let dir = root.join("t1");
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("source.cpp"), "int main() { return 0; }").unwrap();
        fs::write(dir.join("truth.cpp"), truth_code).unwrap();
        ingest_corpus(root).unwrap()
    }

    #[test]
    fn all_compiling_corpus_is_fully_admissible() {
        let root = tempfile::tempdir().unwrap();
        let scratch = tempfile::tempdir().unwrap();
        let corpus = cpp_pair_corpus(root.path(), "int main() { return 0; }");
        let report =
            validate_ground_truth(&corpus, &ToolchainConfig::default(), scratch.path()).unwrap();
        assert_eq!(report.admissible_ids(), vec!["t1"]);
    }

    #[test]
    fn broken_truth_flags_task_with_attached_result() {
        let root = tempfile::tempdir().unwrap();
        let scratch = tempfile::tempdir().unwrap();
        let corpus = cpp_pair_corpus(root.path(), "int main() { return 0 }");
        let report =
            validate_ground_truth(&corpus, &ToolchainConfig::default(), scratch.path()).unwrap();
        let task = &report.tasks[0];
        assert!(!task.admissible);
        assert!(!task.truth_compiles);
        assert!(task
            .truth_result
            .as_ref()
            .unwrap()
            .stderr_text
            .contains("expected"));
        let jsonl = report.to_jsonl().unwrap();
        assert!(jsonl.contains("\"admissible\":false"));
    }
}
