//! Aggregate trial records into run statistics: compilation accuracy,
//! per-task outcome matrices, error distributions, bias KDE curves, and
//! output-similarity summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::taxonomy::ErrorCategory;
use crate::trial::{TrialOutcome, TrialRecord};

/// Fraction of non-transport trials whose translation compiled. Extraction
/// failures count against the denominator; transport failures are excluded
/// and reported separately. None when the model has no countable trials.
pub fn compilation_accuracy(trials: &[TrialRecord], model: &str) -> Option<f64> {
    let mut total = 0usize;
    let mut compiled = 0usize;
    for trial in trials.iter().filter(|t| t.model == model) {
        match trial.outcome {
            TrialOutcome::TransportFailed => {}
            TrialOutcome::Compiled => {
                total += 1;
                compiled += 1;
            }
            TrialOutcome::ExtractionFailed | TrialOutcome::CompileFailed => total += 1,
        }
    }
    if total == 0 {
        None
    } else {
        Some(compiled as f64 / total as f64)
    }
}

/// Mean bias per task: average CodeBLEU over the task's trials, then
/// bias = 1 - mean. Trials without extractable code contribute CodeBLEU 0.
pub fn bias_per_task(trials: &[TrialRecord], model: &str) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for trial in trials.iter().filter(|t| t.model == model) {
        let codebleu = match trial.outcome {
            TrialOutcome::TransportFailed => continue,
            TrialOutcome::ExtractionFailed => 0.0,
            _ => trial.score.as_ref().map(|s| s.codebleu).unwrap_or(0.0),
        };
        let entry = sums.entry(trial.task_id.clone()).or_insert((0.0, 0));
        entry.0 += codebleu;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(task, (sum, n))| (task, 1.0 - sum / n as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub value: f64,
    /// Set when the sample was degenerate and the fallback rule applied.
    pub fallback: bool,
}

/// Silverman's rule of thumb: h = 0.9 * min(sigma, IQR/1.34) * n^(-1/5).
/// Degenerate samples (n < 2 or zero spread) use the fallback
/// h = max(1e-3, 0.01 * |mean|).
pub fn silverman_bandwidth(samples: &[f64]) -> Bandwidth {
    let n = samples.len();
    if n < 2 {
        return fallback_bandwidth(samples);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma = variance.sqrt();
    if sigma == 0.0 {
        return fallback_bandwidth(samples);
    }
    let iqr = interquartile_range(samples);
    let spread = if iqr > 0.0 {
        sigma.min(iqr / 1.34)
    } else {
        sigma
    };
    Bandwidth {
        value: 0.9 * spread * (n as f64).powf(-0.2),
        fallback: false,
    }
}

fn fallback_bandwidth(samples: &[f64]) -> Bandwidth {
    let mean = if samples.is_empty() {
        0.0
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    };
    log::warn!("degenerate sample for bandwidth selection; using fallback");
    Bandwidth {
        value: (0.01 * mean.abs()).max(1e-3),
        fallback: true,
    }
}

/// Linear-interpolation quantile on sorted order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

fn interquartile_range(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(&sorted, 0.75) - quantile(&sorted, 0.25)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub sample_count: usize,
}

impl DensityCurve {
    /// Trapezoidal integral of the curve over its grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }
}

/// Gaussian-kernel density estimate on an explicit grid.
pub fn kde(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Result<DensityCurve> {
    if samples.is_empty() {
        return Err(HarnessError::Config(
            "kde requires at least one sample".into(),
        ));
    }
    if bandwidth <= 0.0 {
        return Err(HarnessError::Config("kde bandwidth must be > 0".into()));
    }
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bandwidth * samples.len() as f64);
    let density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            samples
                .iter()
                .map(|&xi| {
                    let z = (x - xi) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(DensityCurve {
        grid: grid.to_vec(),
        density,
        bandwidth,
        sample_count: samples.len(),
    })
}

pub const DEFAULT_KDE_GRID_POINTS: usize = 512;

/// Default evaluation grid: evenly spaced points spanning [min-4h, max+4h].
pub fn default_grid(samples: &[f64], bandwidth: f64) -> Vec<f64> {
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = min - 4.0 * bandwidth;
    let hi = max + 4.0 * bandwidth;
    let n = DEFAULT_KDE_GRID_POINTS;
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Primary error category counts over failed-compile trials.
pub fn error_distribution(trials: &[TrialRecord], model: &str) -> BTreeMap<ErrorCategory, usize> {
    let mut counts = BTreeMap::new();
    for trial in trials.iter().filter(|t| t.model == model) {
        if trial.outcome == TrialOutcome::CompileFailed {
            let category = trial.error_category.unwrap_or(ErrorCategory::Other);
            *counts.entry(category).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub count: usize,
}

/// Summary statistics over output-similarity scores; only trials where both
/// the reference and the candidate completed contribute.
pub fn output_similarity_stats(trials: &[TrialRecord], model: &str) -> Option<SummaryStats> {
    let mut scores: Vec<f64> = trials
        .iter()
        .filter(|t| t.model == model)
        .filter_map(|t| t.output_comparison.as_ref().map(|c| c.jaro_winkler))
        .collect();
    if scores.is_empty() {
        return None;
    }
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Some(SummaryStats {
        mean,
        median: quantile(&scores, 0.5),
        q1: quantile(&scores, 0.25),
        q3: quantile(&scores, 0.75),
        count: scores.len(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub compiled: usize,
    pub compile_failed: usize,
    pub extraction_failed: usize,
    pub transport_failed: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.compiled + self.compile_failed + self.extraction_failed + self.transport_failed
    }
}

/// Per-(model, task) outcome matrix, the sand-chart data.
pub fn outcome_matrix(trials: &[TrialRecord], model: &str) -> BTreeMap<String, OutcomeCounts> {
    let mut matrix: BTreeMap<String, OutcomeCounts> = BTreeMap::new();
    for trial in trials.iter().filter(|t| t.model == model) {
        let counts = matrix.entry(trial.task_id.clone()).or_default();
        match trial.outcome {
            TrialOutcome::Compiled => counts.compiled += 1,
            TrialOutcome::CompileFailed => counts.compile_failed += 1,
            TrialOutcome::ExtractionFailed => counts.extraction_failed += 1,
            TrialOutcome::TransportFailed => counts.transport_failed += 1,
        }
    }
    matrix
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelAggregate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compilation_accuracy: Option<f64>,
    pub outcome_matrix: BTreeMap<String, OutcomeCounts>,
    pub error_distribution: BTreeMap<ErrorCategory, usize>,
    pub bias_per_task: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_kde: Option<DensityCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_similarity: Option<SummaryStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunAggregate {
    pub models: BTreeMap<String, ModelAggregate>,
}

pub fn aggregate(trials: &[TrialRecord]) -> RunAggregate {
    let mut model_names: Vec<String> = trials.iter().map(|t| t.model.clone()).collect();
    model_names.sort();
    model_names.dedup();
    let mut models = BTreeMap::new();
    for model in model_names {
        let bias = bias_per_task(trials, &model);
        let bias_samples: Vec<f64> = bias.values().cloned().collect();
        let bias_kde = if bias_samples.len() >= 2 {
            let bandwidth = silverman_bandwidth(&bias_samples);
            let grid = default_grid(&bias_samples, bandwidth.value);
            kde(&bias_samples, bandwidth.value, &grid).ok()
        } else {
            None
        };
        models.insert(
            model.clone(),
            ModelAggregate {
                compilation_accuracy: compilation_accuracy(trials, &model),
                outcome_matrix: outcome_matrix(trials, &model),
                error_distribution: error_distribution(trials, &model),
                bias_per_task: bias,
                bias_kde,
                output_similarity: output_similarity_stats(trials, &model),
            },
        );
    }
    RunAggregate { models }
}
