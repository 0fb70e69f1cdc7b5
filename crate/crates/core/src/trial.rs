//! One trial record per workflow traversal. Stage fields populate
//! monotonically: a failed stage leaves every later-stage field absent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codebleu::ScoreBundle;
use crate::exec::{CompileResult, CompileStatus, ExecutionResult};
use crate::gateway::{CompletionRecord, ExtractionOutcome, ExtractionStatus};
use crate::similarity::OutputComparison;
use crate::taxonomy::ErrorCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialOutcome {
    TransportFailed,
    ExtractionFailed,
    CompileFailed,
    Compiled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub run_id: String,
    pub model: String,
    pub task_id: String,
    pub trial_index: u32,
    pub outcome: TrialOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transport_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completion: Option<CompletionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreBundle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compile: Option<CompileResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_category: Option<ErrorCategory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_categories: Option<BTreeMap<ErrorCategory, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub execution: Option<ExecutionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_comparison: Option<OutputComparison>,
    pub total_ms: u64,
}

impl TrialRecord {
    /// Check the early-exit contract; returns the first violated stage.
    pub fn stage_ordering_violation(&self) -> Option<&'static str> {
        if self.completion.is_none()
            && (self.extraction.is_some() || self.score.is_some() || self.compile.is_some())
        {
            return Some("post-transport fields present without completion");
        }
        let extracted = matches!(
            self.extraction.as_ref().map(|e| e.status),
            Some(ExtractionStatus::Extracted)
        );
        if !extracted && (self.score.is_some() || self.compile.is_some()) {
            return Some("score/compile present without successful extraction");
        }
        let compiled = matches!(
            self.compile.as_ref().map(|c| c.status),
            Some(CompileStatus::Success)
        );
        if !compiled && (self.execution.is_some() || self.output_comparison.is_some()) {
            return Some("execution present without successful compile");
        }
        if self.output_comparison.is_some() && self.execution.is_none() {
            return Some("output comparison present without candidate execution");
        }
        None
    }
}
