//! Aggregate persisted trials into report.json plus analysis CSVs. Output is
//! deterministic: maps are ordered and no timestamps enter the report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::{aggregate, RunAggregate};
use crate::error::{HarnessError, Result};
use crate::runner::load_trials;
use crate::taxonomy::ErrorCategory;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub trial_count: usize,
    /// Lines in trials.jsonl that failed to parse and were skipped.
    pub corrupt_lines: usize,
    pub aggregate: RunAggregate,
}

pub struct ReportArtifacts {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Build report.json and the CSV set from `run_dir/trials.jsonl`.
pub fn emit_report(run_dir: &Path, with_svg: bool) -> Result<ReportArtifacts> {
    let trials_path = run_dir.join("trials.jsonl");
    if !trials_path.exists() {
        return Err(HarnessError::Config(format!(
            "no trials.jsonl in {}",
            run_dir.display()
        )));
    }
    let (trials, corrupt_lines) = load_trials(&trials_path)?;
    let report = Report {
        trial_count: trials.len(),
        corrupt_lines,
        aggregate: aggregate(&trials),
    };

    let mut files = Vec::new();
    let write = |name: &str, contents: String| -> Result<PathBuf> {
        let path = run_dir.join(name);
        fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    };

    files.push(write(
        "report.json",
        serde_json::to_string_pretty(&report)? + "\n",
    )?);
    files.push(write(
        "compilation_accuracy.csv",
        compilation_accuracy_csv(&report.aggregate),
    )?);
    files.push(write(
        "per_task_matrix.csv",
        per_task_matrix_csv(&report.aggregate),
    )?);
    files.push(write(
        "error_distribution.csv",
        error_distribution_csv(&report.aggregate),
    )?);
    files.push(write("bias_kde.csv", bias_kde_csv(&report.aggregate))?);
    files.push(write(
        "output_similarity.csv",
        output_similarity_csv(&report.aggregate),
    )?);
    if with_svg {
        files.push(write("bias_kde.svg", bias_kde_svg(&report.aggregate))?);
    }
    Ok(ReportArtifacts { report, files })
}

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

pub fn compilation_accuracy_csv(aggregate: &RunAggregate) -> String {
    let mut out = String::from("model,compilation_accuracy,trials\n");
    for (model, stats) in &aggregate.models {
        let trials: usize = stats.outcome_matrix.values().map(|c| c.total()).sum();
        let accuracy = stats
            .compilation_accuracy
            .map(|a| format!("{a:.4}"))
            .unwrap_or_default();
        let _ = writeln!(out, "{},{accuracy},{trials}", csv_field(model));
    }
    out
}

pub fn per_task_matrix_csv(aggregate: &RunAggregate) -> String {
    let mut out =
        String::from("model,task_id,compiled,compile_failed,extraction_failed,transport_failed\n");
    for (model, stats) in &aggregate.models {
        for (task_id, counts) in &stats.outcome_matrix {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(model),
                csv_field(task_id),
                counts.compiled,
                counts.compile_failed,
                counts.extraction_failed,
                counts.transport_failed
            );
        }
    }
    out
}

pub fn error_distribution_csv(aggregate: &RunAggregate) -> String {
    let mut out = String::from("model,category,count\n");
    for (model, stats) in &aggregate.models {
        // Fixed category order so rows are stable even for empty counts.
        for category in ErrorCategory::ALL {
            let count = stats
                .error_distribution
                .get(&category)
                .copied()
                .unwrap_or(0);
            let _ = writeln!(out, "{},{category},{count}", csv_field(model));
        }
    }
    out
}

pub fn bias_kde_csv(aggregate: &RunAggregate) -> String {
    let mut out = String::from("model,bias,density,bandwidth\n");
    for (model, stats) in &aggregate.models {
        if let Some(curve) = &stats.bias_kde {
            for (x, d) in curve.grid.iter().zip(&curve.density) {
                let _ = writeln!(
                    out,
                    "{},{x:.6},{d:.6},{:.6}",
                    csv_field(model),
                    curve.bandwidth
                );
            }
        }
    }
    out
}

pub fn output_similarity_csv(aggregate: &RunAggregate) -> String {
    let mut out = String::from("model,mean,median,q1,q3,count\n");
    for (model, stats) in &aggregate.models {
        if let Some(s) = &stats.output_similarity {
            let _ = writeln!(
                out,
                "{},{:.4},{:.4},{:.4},{:.4},{}",
                csv_field(model),
                s.mean,
                s.median,
                s.q1,
                s.q3,
                s.count
            );
        }
    }
    out
}

/// Minimal line-plot SVG of the per-model bias density curves.
pub fn bias_kde_svg(aggregate: &RunAggregate) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

    let curves: Vec<(&String, &crate::analytics::DensityCurve)> = aggregate
        .models
        .iter()
        .filter_map(|(m, s)| s.bias_kde.as_ref().map(|c| (m, c)))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if !curves.is_empty() {
        let x_min = curves
            .iter()
            .flat_map(|(_, c)| c.grid.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let x_max = curves
            .iter()
            .flat_map(|(_, c)| c.grid.iter())
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let y_max = curves
            .iter()
            .flat_map(|(_, c)| c.density.iter())
            .cloned()
            .fold(0.0_f64, f64::max)
            .max(1e-9);
        let span_x = (x_max - x_min).max(1e-9);
        for (i, (model, curve)) in curves.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let points: Vec<String> = curve
                .grid
                .iter()
                .zip(&curve.density)
                .map(|(x, d)| {
                    let px = PAD + (x - x_min) / span_x * (W - 2.0 * PAD);
                    let py = H - PAD - d / y_max * (H - 2.0 * PAD);
                    format!("{px:.1},{py:.1}")
                })
                .collect();
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                points.join(" ")
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"12\">{}</text>",
                PAD + 4.0,
                PAD + 14.0 * (i as f64 + 1.0),
                xml_escape(model)
            );
        }
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - PAD,
        W - PAD,
        H - PAD
    );
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
