//! Run configuration: endpoints, models, sampling parameters, toolchain,
//! and the two shipped sampling profiles.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::exec::ToolchainConfig;
use crate::lang::Lang;

/// Sampling parameters sent with every completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_p: Option<f64>,
    pub max_new_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context_length: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<i64>,
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature < 0.0 {
            return Err(HarnessError::Config("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(HarnessError::Config("top_p must be in (0, 1]".into()));
        }
        if let Some(p) = self.min_p {
            if !(0.0..=1.0).contains(&p) {
                return Err(HarnessError::Config("min_p must be in [0, 1]".into()));
            }
        }
        if self.max_new_tokens < 1 {
            return Err(HarnessError::Config("max_new_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

/// Named profile bundling sampling defaults with a trial count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    SelfHosted,
    Cloud,
}

impl Profile {
    pub fn sampling(self) -> SamplingConfig {
        match self {
            Profile::SelfHosted => SamplingConfig {
                temperature: 0.8,
                top_p: 0.95,
                min_p: Some(0.05),
                max_new_tokens: 8192,
                context_length: None,
                seed: None,
            },
            Profile::Cloud => SamplingConfig {
                temperature: 0.8,
                top_p: 0.9,
                min_p: None,
                max_new_tokens: 4096,
                context_length: Some(4096),
                seed: None,
            },
        }
    }

    pub fn trials_per_task(self) -> u32 {
        match self {
            Profile::SelfHosted => 128,
            Profile::Cloud => 25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub id: String,
    pub url: String,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Token-bucket rate limit, requests per minute. None = unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_limit_rpm: Option<u32>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
    #[serde(default = "default_request_timeout_secs")]
    pub request_timeout_secs: u64,
}

fn default_max_retries() -> u32 {
    5
}
fn default_retry_base_ms() -> u64 {
    200
}
fn default_request_timeout_secs() -> u64 {
    600
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    /// Endpoint id this model is served from.
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    /// Explicit sampling settings; override the profile when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_per_task: Option<u32>,
}

impl ModelConfig {
    pub fn effective_sampling(&self) -> SamplingConfig {
        self.sampling
            .clone()
            .unwrap_or_else(|| self.profile.unwrap_or(Profile::SelfHosted).sampling())
    }

    pub fn effective_trials(&self) -> u32 {
        self.trials_per_task.unwrap_or_else(|| {
            self.profile
                .unwrap_or(Profile::SelfHosted)
                .trials_per_task()
        })
    }
}

/// Top-level run configuration (TOML on disk).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Separate bound on concurrent compile/execute slots.
    #[serde(default = "default_compile_workers")]
    pub compile_workers: usize,
    #[serde(default)]
    pub seed: u64,
    /// Path to the prompt template file; built-in default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<PathBuf>,
    #[serde(default = "default_target_lang")]
    pub target_lang: Lang,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcripts_dir: Option<PathBuf>,
    pub endpoints: Vec<EndpointConfig>,
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub toolchain: ToolchainConfig,
}

fn default_workers() -> usize {
    4
}
fn default_compile_workers() -> usize {
    2
}
fn default_target_lang() -> Lang {
    Lang::Cpp
}

/// Default prompt template; configurable, not ground truth.
pub const DEFAULT_PROMPT_TEMPLATE: &str = "Translate the following Fortran code to C++. Reply with only the translated C++ code inside a single ```cpp code block.\n\n```fortran\n{source}\n```";

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.workers < 1 {
            problems.push("workers must be >= 1".to_string());
        }
        if self.compile_workers < 1 {
            problems.push("compile_workers must be >= 1".to_string());
        }
        if self.models.is_empty() {
            problems.push("at least one model is required".to_string());
        }
        let endpoint_ids: HashSet<&str> = self.endpoints.iter().map(|e| e.id.as_str()).collect();
        if endpoint_ids.len() != self.endpoints.len() {
            problems.push("endpoint ids must be unique".to_string());
        }
        for model in &self.models {
            if !endpoint_ids.contains(model.endpoint.as_str()) {
                problems.push(format!(
                    "model '{}' references unknown endpoint '{}'",
                    model.name, model.endpoint
                ));
            }
            if model.effective_trials() < 1 {
                problems.push(format!(
                    "model '{}': trials_per_task must be >= 1",
                    model.name
                ));
            }
            if let Err(e) = model.effective_sampling().validate() {
                problems.push(format!("model '{}': {e}", model.name));
            }
        }
        if let Err(e) = self.toolchain.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(problems.join("; ")))
        }
    }

    pub fn endpoint(&self, id: &str) -> Option<&EndpointConfig> {
        self.endpoints.iter().find(|e| e.id == id)
    }

    pub fn prompt_template_text(&self) -> Result<String> {
        match &self.prompt_template {
            Some(path) => fs::read_to_string(path).map_err(|e| HarnessError::io(path, e)),
            None => Ok(DEFAULT_PROMPT_TEMPLATE.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_hosted_profile_matches_published_settings() {
        let s = Profile::SelfHosted.sampling();
        assert_eq!(s.temperature, 0.8);
        assert_eq!(s.top_p, 0.95);
        assert_eq!(s.min_p, Some(0.05));
        assert_eq!(s.max_new_tokens, 8192);
        assert_eq!(Profile::SelfHosted.trials_per_task(), 128);
    }

    #[test]
    fn cloud_profile_matches_published_settings() {
        let s = Profile::Cloud.sampling();
        assert_eq!(s.temperature, 0.8);
        assert_eq!(s.top_p, 0.9);
        assert_eq!(s.min_p, None);
        assert_eq!(Profile::Cloud.trials_per_task(), 25);
    }

    #[test]
    fn sampling_validation_rejects_bad_ranges() {
        let mut s = Profile::SelfHosted.sampling();
        s.top_p = 0.0;
        assert!(s.validate().is_err());
        let mut s = Profile::SelfHosted.sampling();
        s.temperature = -0.1;
        assert!(s.validate().is_err());
        let mut s = Profile::SelfHosted.sampling();
        s.min_p = Some(1.5);
        assert!(s.validate().is_err());
    }

    #[test]
    fn unknown_endpoint_is_a_field_level_error() {
        let toml_text = r#"
            corpus = "corpus"
            output_dir = "runs"
            [[endpoints]]
            id = "a"
            url = "http://localhost:1"
            [[models]]
            name = "m"
            endpoint = "missing"
        "#;
        let config: RunConfig = toml::from_str(toml_text).unwrap();
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("unknown endpoint 'missing'"), "{err}");
    }
}
