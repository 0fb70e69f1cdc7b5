//! Harness for evaluating LLM translation of legacy source code: prompt,
//! request, extract, score, compile, classify, execute, compare, aggregate.

pub mod analytics;
pub mod codebleu;
pub mod config;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod gateway;
pub mod lang;
pub mod report;
pub mod runner;
pub mod similarity;
pub mod taxonomy;
pub mod trial;

pub use codebleu::{codebleu_score, CodeBleuWeights, ScoreBundle};
pub use config::{EndpointConfig, ModelConfig, Profile, RunConfig, SamplingConfig};
pub use corpus::{Corpus, TranslationTask, ValidationReport};
pub use error::{HarnessError, Result};
pub use exec::{CompileResult, CompileStatus, ExecStatus, ExecutionResult, ToolchainConfig};
pub use lang::Lang;
pub use similarity::{jaro_winkler, output_similarity, OutputComparison};
pub use taxonomy::{classify_compile_failure, ErrorCategory, RuleSet};
pub use trial::{TrialOutcome, TrialRecord};
