//! LLM gateway: prompt rendering, OpenAI-style chat-completions client with
//! retry/backoff and a token-bucket rate limiter, and code extraction from
//! completions.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{EndpointConfig, SamplingConfig};
use crate::error::{HarnessError, Result};
use crate::lang::Lang;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub task_id: String,
    pub model_name: String,
    pub trial_index: u32,
    pub prompt_text: String,
    pub completion_text: String,
    pub latency_ms: u64,
    pub endpoint_id: String,
    pub timestamp_ms: u64,
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionStatus {
    Extracted,
    ExtractionFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionMethod {
    TaggedFence,
    AnyFence,
    Heuristic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionOutcome {
    pub status: ExtractionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<ExtractionMethod>,
}

impl ExtractionOutcome {
    fn extracted(code: String, method: ExtractionMethod) -> ExtractionOutcome {
        ExtractionOutcome {
            status: ExtractionStatus::Extracted,
            code: Some(code),
            method: Some(method),
        }
    }

    fn failed() -> ExtractionOutcome {
        ExtractionOutcome {
            status: ExtractionStatus::ExtractionFailed,
            code: None,
            method: None,
        }
    }
}

/// Substitute the source program into the prompt template. The template must
/// contain exactly one `{source}` placeholder; substitution is single-pass.
pub fn render_prompt(template: &str, source_code: &str) -> Result<String> {
    let count = template.matches("{source}").count();
    if count != 1 {
        return Err(HarnessError::Template(format!(
            "template must contain exactly one {{source}} placeholder, found {count}"
        )));
    }
    Ok(template.replacen("{source}", source_code, 1))
}

/// Extract candidate code from a completion. Precedence: fenced block tagged
/// for the target language, then any fenced block, then a heuristic scan for
/// the first line that looks like a top-level declaration.
pub fn extract_code(completion_text: &str, target_lang: Lang) -> ExtractionOutcome {
    let fences = find_fences(completion_text);
    let tags = target_lang.fence_tags();
    if let Some(block) = fences
        .iter()
        .find(|f| tags.contains(&f.tag.to_ascii_lowercase().as_str()))
    {
        if !block.body.trim().is_empty() {
            return ExtractionOutcome::extracted(block.body.clone(), ExtractionMethod::TaggedFence);
        }
    }
    if let Some(block) = fences.iter().find(|f| !f.body.trim().is_empty()) {
        return ExtractionOutcome::extracted(block.body.clone(), ExtractionMethod::AnyFence);
    }
    if let Some(code) = heuristic_extract(completion_text) {
        return ExtractionOutcome::extracted(code, ExtractionMethod::Heuristic);
    }
    ExtractionOutcome::failed()
}

struct Fence {
    tag: String,
    body: String,
}

fn find_fences(text: &str) -> Vec<Fence> {
    let mut fences = Vec::new();
    let mut tag: Option<String> = None;
    let mut body = String::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") {
            match tag.take() {
                Some(open_tag) => {
                    fences.push(Fence {
                        tag: open_tag,
                        body: std::mem::take(&mut body),
                    });
                }
                None => {
                    tag = Some(trimmed.trim_start_matches('`').trim().to_string());
                }
            }
        } else if tag.is_some() {
            body.push_str(line);
            body.push('\n');
        }
    }
    // Unterminated fence: take the remainder as the block body.
    if let Some(open_tag) = tag {
        fences.push(Fence {
            tag: open_tag,
            body,
        });
    }
    fences
}

const DECLARATION_KEYWORDS: &[&str] = &[
    "#include",
    "int",
    "void",
    "double",
    "float",
    "char",
    "bool",
    "long",
    "short",
    "unsigned",
    "signed",
    "template",
    "class",
    "struct",
    "namespace",
    "using",
    "auto",
    "extern",
    "static",
    "const",
    "typedef",
];

fn heuristic_extract(text: &str) -> Option<String> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_start();
        let first_word: &str = trimmed
            .split(|c: char| c.is_whitespace() || c == '(' || c == '<')
            .next()
            .unwrap_or("");
        if DECLARATION_KEYWORDS.contains(&first_word) {
            return Some(text[offset..].to_string());
        }
        offset += line.len();
    }
    None
}

/// Token-bucket rate limiter shared by all workers hitting one endpoint.
pub struct RateLimiter {
    state: Mutex<BucketState>,
    capacity: f64,
    refill_per_sec: f64,
}

struct BucketState {
    tokens: f64,
    last_refill: Instant,
}

impl RateLimiter {
    pub fn new(requests_per_minute: u32) -> RateLimiter {
        let capacity = requests_per_minute.max(1) as f64;
        RateLimiter {
            state: Mutex::new(BucketState {
                tokens: capacity,
                last_refill: Instant::now(),
            }),
            capacity,
            refill_per_sec: capacity / 60.0,
        }
    }

    /// Block until a request token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap();
                let elapsed = state.last_refill.elapsed().as_secs_f64();
                state.tokens = (state.tokens + elapsed * self.refill_per_sec).min(self.capacity);
                state.last_refill = Instant::now();
                if state.tokens >= 1.0 {
                    state.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - state.tokens) / self.refill_per_sec)
            };
            std::thread::sleep(wait.min(Duration::from_millis(250)));
        }
    }
}

/// HTTP client for one OpenAI-compatible endpoint. Safe to share across
/// worker threads; the rate limiter is the only synchronized state.
pub struct Gateway {
    endpoint: EndpointConfig,
    client: reqwest::blocking::Client,
    limiter: Option<RateLimiter>,
    api_key: Option<String>,
    transcripts_dir: Option<PathBuf>,
}

impl Gateway {
    pub fn new(endpoint: EndpointConfig, transcripts_dir: Option<PathBuf>) -> Result<Gateway> {
        let api_key = match &endpoint.api_key_env {
            Some(var) => std::env::var(var).ok(),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.request_timeout_secs))
            .build()
            .map_err(|e| HarnessError::Infra(format!("http client: {e}")))?;
        let limiter = endpoint.rate_limit_rpm.map(RateLimiter::new);
        Ok(Gateway {
            endpoint,
            client,
            limiter,
            api_key,
            transcripts_dir,
        })
    }

    pub fn endpoint_id(&self) -> &str {
        &self.endpoint.id
    }

    /// Issue one translation request. Transient failures (429/5xx, timeouts)
    /// are retried with exponential backoff up to the endpoint's retry cap;
    /// exhausting the cap yields a transport error the caller records as a
    /// failed trial.
    pub fn request_translation(
        &self,
        model: &str,
        task_id: &str,
        prompt: &str,
        sampling: &SamplingConfig,
        trial_index: u32,
    ) -> Result<CompletionRecord> {
        let url = format!(
            "{}/chat/completions",
            self.endpoint.url.trim_end_matches('/')
        );
        let mut body = json!({
            "model": model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "max_tokens": sampling.max_new_tokens,
        });
        if let Some(min_p) = sampling.min_p {
            body["min_p"] = json!(min_p);
        }
        if let Some(seed) = sampling.seed {
            body["seed"] = json!(seed);
        }

        let start = Instant::now();
        let mut attempt = 0u32;
        let completion_text = loop {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            let mut request = self.client.post(&url).json(&body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let value: serde_json::Value = response.json().map_err(|e| {
                            HarnessError::Protocol(format!("bad response body: {e}"))
                        })?;
                        break extract_choice_text(&value)?;
                    }
                    let transient = status.as_u16() == 429 || status.is_server_error();
                    if !transient || attempt >= self.endpoint.max_retries {
                        return Err(HarnessError::Transport {
                            attempts: attempt + 1,
                            message: format!("HTTP {status}"),
                        });
                    }
                    log::warn!("{url}: HTTP {status}, retry {}", attempt + 1);
                }
                Err(e) => {
                    if attempt >= self.endpoint.max_retries {
                        return Err(HarnessError::Transport {
                            attempts: attempt + 1,
                            message: e.to_string(),
                        });
                    }
                    log::warn!("{url}: {e}, retry {}", attempt + 1);
                }
            }
            let backoff = self
                .endpoint
                .retry_base_ms
                .saturating_mul(1u64 << attempt.min(10));
            std::thread::sleep(Duration::from_millis(backoff));
            attempt += 1;
        };

        let record = CompletionRecord {
            task_id: task_id.to_string(),
            model_name: model.to_string(),
            trial_index,
            prompt_text: prompt.to_string(),
            completion_text,
            latency_ms: start.elapsed().as_millis() as u64,
            endpoint_id: self.endpoint.id.clone(),
            timestamp_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            retries: attempt,
        };
        self.mirror_transcript(&body, &record);
        Ok(record)
    }

    fn mirror_transcript(&self, request_body: &serde_json::Value, record: &CompletionRecord) {
        let Some(dir) = &self.transcripts_dir else {
            return;
        };
        let _ = fs::create_dir_all(dir);
        let name = format!(
            "{}__{}__{}.json",
            sanitize(&record.model_name),
            sanitize(&record.task_id),
            record.trial_index
        );
        let transcript = json!({
            "request": request_body,
            "completion": record.completion_text,
            "latency_ms": record.latency_ms,
            "retries": record.retries,
        });
        if let Ok(text) = serde_json::to_string_pretty(&transcript) {
            let _ = fs::write(dir.join(name), text);
        }
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn extract_choice_text(value: &serde_json::Value) -> Result<String> {
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| HarnessError::Protocol("response missing choices[0].message.content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_substitutes_once() {
        let out = render_prompt("Translate:\n{source}", "print *,1").unwrap();
        assert_eq!(out, "Translate:\nprint *,1");
    }

    #[test]
    fn template_without_placeholder_is_an_error() {
        assert!(render_prompt("Translate this.", "x").is_err());
        assert!(render_prompt("{source} and {source}", "x").is_err());
    }

    #[test]
    fn source_containing_placeholder_is_not_rescanned() {
        let out = render_prompt("P: {source}", "literal {source} text").unwrap();
        assert_eq!(out, "P: literal {source} text");
    }

    #[test]
    fn tagged_fence_wins() {
        let outcome = extract_code("Here:\n```cpp\nint main(){return 0;}\n```", Lang::Cpp);
        assert_eq!(outcome.status, ExtractionStatus::Extracted);
        assert_eq!(outcome.code.as_deref(), Some("int main(){return 0;}\n"));
        assert_eq!(outcome.method, Some(ExtractionMethod::TaggedFence));
    }

    #[test]
    fn prose_only_completion_fails_extraction() {
        let outcome = extract_code("I cannot translate this.", Lang::Cpp);
        assert_eq!(outcome.status, ExtractionStatus::ExtractionFailed);
        assert!(outcome.code.is_none());
    }

    #[test]
    fn second_tagged_block_beats_first_untagged() {
        let text = "```\nnot this\n```\nand\n```CPP\nint x;\n```\n";
        let outcome = extract_code(text, Lang::Cpp);
        assert_eq!(outcome.method, Some(ExtractionMethod::TaggedFence));
        assert_eq!(outcome.code.as_deref(), Some("int x;\n"));
    }

    #[test]
    fn untagged_fence_used_when_no_tagged_block() {
        let text = "```\nint y;\n```";
        let outcome = extract_code(text, Lang::Cpp);
        assert_eq!(outcome.method, Some(ExtractionMethod::AnyFence));
        assert_eq!(outcome.code.as_deref(), Some("int y;\n"));
    }

    #[test]
    fn heuristic_starts_at_first_declaration_line() {
        let text = "Sure, here is the code:\n#include <iostream>\nint main() { return 0; }\n";
        let outcome = extract_code(text, Lang::Cpp);
        assert_eq!(outcome.method, Some(ExtractionMethod::Heuristic));
        assert!(outcome.code.unwrap().starts_with("#include"));
    }

    #[test]
    fn extracted_code_is_substring_of_completion() {
        let texts = [
            "```cpp\nint a;\n```",
            "prose\n```\nint b;\n```\nmore",
            "int c = 0;\n",
        ];
        for text in texts {
            let outcome = extract_code(text, Lang::Cpp);
            if let Some(code) = outcome.code {
                assert!(text.contains(&code), "{text:?} vs {code:?}");
            }
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let text = "```cpp\nint main(){}\n```";
        let a = extract_code(text, Lang::Cpp);
        let b = extract_code(text, Lang::Cpp);
        assert_eq!(a.code, b.code);
        assert_eq!(a.method, b.method);
    }
}
