//! Compile candidate/ground-truth programs and run the resulting binaries
//! under time and output limits. Generated code is untrusted: every binary
//! runs in its own scratch directory with a scrubbed environment.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::lang::Lang;

/// Per-language compiler invocation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LangTool {
    pub compiler: String,
    /// Command template with `{compiler}`, `{flags}`, `{src}`, `{out}` placeholders.
    #[serde(default = "default_template")]
    pub template: String,
    #[serde(default)]
    pub flags: Vec<String>,
}

fn default_template() -> String {
    "{compiler} {flags} -o {out} {src}".to_string()
}

impl LangTool {
    pub fn new(compiler: &str) -> LangTool {
        LangTool {
            compiler: compiler.to_string(),
            template: default_template(),
            flags: Vec::new(),
        }
    }

    /// Expand the template into an argv. `{flags}` splices the flag list.
    fn argv(&self, src: &Path, out: &Path) -> Result<Vec<String>> {
        let mut argv = Vec::new();
        for word in self.template.split_whitespace() {
            match word {
                "{compiler}" => argv.push(self.compiler.clone()),
                "{flags}" => argv.extend(self.flags.iter().cloned()),
                "{src}" => argv.push(src.to_string_lossy().into_owned()),
                "{out}" => argv.push(out.to_string_lossy().into_owned()),
                other => argv.push(other.to_string()),
            }
        }
        if argv.is_empty() {
            return Err(HarnessError::Config(
                "empty compiler command template".into(),
            ));
        }
        Ok(argv)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolchainConfig {
    /// Keyed by language name ("cpp", "fortran", "c").
    #[serde(default = "default_languages")]
    pub languages: BTreeMap<String, LangTool>,
    #[serde(default = "default_compile_timeout")]
    pub compile_timeout_secs: u64,
    #[serde(default = "default_run_timeout")]
    pub run_timeout_secs: u64,
    #[serde(default = "default_max_output_bytes")]
    pub max_output_bytes: usize,
    /// Environment variable names never passed through to child processes.
    #[serde(default)]
    pub env_deny_list: Vec<String>,
}

fn default_languages() -> BTreeMap<String, LangTool> {
    let mut map = BTreeMap::new();
    map.insert("cpp".to_string(), LangTool::new("g++"));
    map.insert("c".to_string(), LangTool::new("gcc"));
    map.insert("fortran".to_string(), LangTool::new("gfortran"));
    map
}

fn default_compile_timeout() -> u64 {
    60
}
fn default_run_timeout() -> u64 {
    30
}
fn default_max_output_bytes() -> usize {
    1024 * 1024
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        ToolchainConfig {
            languages: default_languages(),
            compile_timeout_secs: default_compile_timeout(),
            run_timeout_secs: default_run_timeout(),
            max_output_bytes: default_max_output_bytes(),
            env_deny_list: Vec::new(),
        }
    }
}

impl ToolchainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.compile_timeout_secs == 0 || self.run_timeout_secs == 0 {
            return Err(HarnessError::Config(
                "toolchain timeouts must be > 0".into(),
            ));
        }
        if self.max_output_bytes == 0 {
            return Err(HarnessError::Config("max_output_bytes must be > 0".into()));
        }
        Ok(())
    }

    pub fn tool_for(&self, lang: Lang) -> Result<&LangTool> {
        self.languages.get(lang.name()).ok_or_else(|| {
            HarnessError::Config(format!(
                "no toolchain configured for language '{}'",
                lang.name()
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompileStatus {
    Success,
    Failure,
    Timeout,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompileResult {
    pub status: CompileStatus,
    pub stdout_text: String,
    pub stderr_text: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact_path: Option<PathBuf>,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecStatus {
    Completed,
    Timeout,
    Crashed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub stdout_text: String,
    pub stderr_text: String,
    pub exit_code: i32,
    pub duration_ms: u64,
    pub truncated: bool,
}

/// Compile `source` in a fresh file under `workdir`. Compile failures and
/// timeouts are results; a missing compiler binary is a configuration error.
pub fn compile(
    source: &str,
    lang: Lang,
    toolchain: &ToolchainConfig,
    workdir: &Path,
) -> Result<CompileResult> {
    fs::create_dir_all(workdir).map_err(|e| HarnessError::io(workdir, e))?;
    let tool = toolchain.tool_for(lang)?;
    let src_path = workdir.join(format!("src.{}", lang.extension()));
    let out_path = workdir.join("prog.bin");
    fs::write(&src_path, source).map_err(|e| HarnessError::io(&src_path, e))?;

    let argv = tool.argv(&src_path, &out_path)?;
    let start = Instant::now();
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let child = cmd.spawn().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            HarnessError::Config(format!("compiler '{}' not found", argv[0]))
        } else {
            HarnessError::Infra(format!("failed to spawn '{}': {e}", argv[0]))
        }
    })?;

    let outcome = wait_with_limits(
        child,
        None,
        Duration::from_secs(toolchain.compile_timeout_secs),
        toolchain.max_output_bytes,
    )?;
    let duration_ms = start.elapsed().as_millis() as u64;

    let status = if outcome.timed_out {
        CompileStatus::Timeout
    } else if outcome.exit_code == 0 && out_path.exists() {
        CompileStatus::Success
    } else {
        CompileStatus::Failure
    };
    Ok(CompileResult {
        status,
        stdout_text: outcome.stdout,
        stderr_text: outcome.stderr,
        exit_code: outcome.exit_code,
        artifact_path: if status == CompileStatus::Success {
            Some(out_path)
        } else {
            None
        },
        duration_ms,
    })
}

/// Run a compiled artifact with optional stdin, kill at the run timeout, and
/// truncate output at the configured cap. Nonzero exit is data, not an error.
pub fn execute(
    artifact: &Path,
    stdin_fixture: Option<&str>,
    limits: &ToolchainConfig,
) -> Result<ExecutionResult> {
    if !artifact.exists() {
        return Err(HarnessError::Infra(format!(
            "artifact does not exist: {}",
            artifact.display()
        )));
    }
    let workdir = artifact.parent().unwrap_or_else(|| Path::new("."));
    let start = Instant::now();
    let mut cmd = Command::new(artifact);
    cmd.current_dir(workdir)
        .stdin(if stdin_fixture.is_some() {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    // Untrusted code: pass only a minimal environment through.
    cmd.env_clear();
    for key in ["PATH", "HOME", "LANG", "TMPDIR"] {
        if limits.env_deny_list.iter().any(|d| d == key) {
            continue;
        }
        if let Ok(value) = std::env::var(key) {
            cmd.env(key, value);
        }
    }
    let child = cmd.spawn().map_err(|e| {
        HarnessError::Infra(format!("failed to spawn '{}': {e}", artifact.display()))
    })?;

    let outcome = wait_with_limits(
        child,
        stdin_fixture,
        Duration::from_secs(limits.run_timeout_secs),
        limits.max_output_bytes,
    )?;
    let duration_ms = start.elapsed().as_millis() as u64;

    let status = if outcome.timed_out {
        ExecStatus::Timeout
    } else if outcome.signalled {
        ExecStatus::Crashed
    } else {
        ExecStatus::Completed
    };
    Ok(ExecutionResult {
        status,
        stdout_text: outcome.stdout,
        stderr_text: outcome.stderr,
        exit_code: outcome.exit_code,
        duration_ms,
        truncated: outcome.truncated,
    })
}

struct ChildOutcome {
    stdout: String,
    stderr: String,
    exit_code: i32,
    timed_out: bool,
    signalled: bool,
    truncated: bool,
}

/// Capped pipe reader: keeps draining after the cap so the child never blocks
/// on a full pipe, but discards the excess.
fn read_capped(mut pipe: impl Read, cap: usize) -> (Vec<u8>, bool) {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 8192];
    let mut truncated = false;
    loop {
        match pipe.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => {
                if buf.len() < cap {
                    let take = n.min(cap - buf.len());
                    buf.extend_from_slice(&chunk[..take]);
                    if take < n {
                        truncated = true;
                    }
                } else {
                    truncated = true;
                }
            }
            Err(_) => break,
        }
    }
    (buf, truncated)
}

fn wait_with_limits(
    mut child: Child,
    stdin_fixture: Option<&str>,
    timeout: Duration,
    max_output_bytes: usize,
) -> Result<ChildOutcome> {
    if let Some(text) = stdin_fixture {
        if let Some(mut stdin) = child.stdin.take() {
            // The child may exit without reading; a broken pipe is fine.
            let _ = stdin.write_all(text.as_bytes());
        }
    }
    let stdout_pipe = child.stdout.take();
    let stderr_pipe = child.stderr.take();
    let stdout_handle = std::thread::spawn(move || match stdout_pipe {
        Some(p) => read_capped(p, max_output_bytes),
        None => (Vec::new(), false),
    });
    let stderr_handle = std::thread::spawn(move || match stderr_pipe {
        Some(p) => read_capped(p, max_output_bytes),
        None => (Vec::new(), false),
    });

    let deadline = Instant::now() + timeout;
    let mut timed_out = false;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    timed_out = true;
                    let _ = child.kill();
                    break child
                        .wait()
                        .map_err(|e| HarnessError::Infra(format!("wait failed: {e}")))?;
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(HarnessError::Infra(format!("wait failed: {e}"))),
        }
    };

    let (stdout_bytes, stdout_trunc) = stdout_handle.join().unwrap_or((Vec::new(), false));
    let (stderr_bytes, stderr_trunc) = stderr_handle.join().unwrap_or((Vec::new(), false));
    let signalled = status.code().is_none() && !timed_out;
    Ok(ChildOutcome {
        stdout: String::from_utf8_lossy(&stdout_bytes).into_owned(),
        stderr: String::from_utf8_lossy(&stderr_bytes).into_owned(),
        exit_code: status.code().unwrap_or(-1),
        timed_out,
        signalled,
        truncated: stdout_trunc || stderr_trunc,
    })
}
