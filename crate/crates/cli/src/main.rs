use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use xlate_core::config::RunConfig;
use xlate_core::corpus;
use xlate_core::report::emit_report;
use xlate_core::runner::run_pipeline;
use xlate_core::taxonomy::{classify_compile_failure, RuleSet};
use xlate_core::{
    codebleu_score, output_similarity, CodeBleuWeights, CompileResult, CompileStatus, HarnessError,
    Lang,
};

#[derive(Parser)]
#[command(
    name = "xlate",
    about = "Legacy-code translation evaluation harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for every configured model and admissible task.
    Run(RunArgs),
    /// Load a corpus directory and print its summary as JSON.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Compile-check every task pair and print a validation report (JSONL).
    Validate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Aggregate a run directory into report.json and the analysis CSVs.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Score a candidate translation against a reference (CodeBLEU bundle).
    ScoreCode {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        cand: PathBuf,
        #[arg(long)]
        lang: String,
    },
    /// Compare two program outputs (normalized Jaro-Winkler).
    ScoreOutput {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        cand: PathBuf,
    },
    /// Classify compiler stderr into the error taxonomy.
    ClassifyErrors {
        #[arg(long)]
        stderr: PathBuf,
        /// Apply rules in the published table order instead of the repaired
        /// default order.
        #[arg(long)]
        strict_table_order: bool,
        /// Use a custom rules file instead of the built-in set.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated subset of configured model names.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Override trials per task for every model.
    #[arg(long)]
    trials: Option<u32>,
    /// Continue an interrupted run: already-persisted trials are skipped.
    #[arg(long)]
    resume: bool,
    /// Run directory name under the configured output directory.
    #[arg(long, default_value = "default")]
    run_id: String,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Ingest { corpus } => {
            let corpus = corpus::ingest_corpus(&corpus)?;
            println!("{}", serde_json::to_string_pretty(&corpus)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { corpus, config } => {
            let config = RunConfig::load(&config)?;
            config.toolchain.validate()?;
            let corpus = corpus::ingest_corpus(&corpus)?;
            let scratch = tempfile::tempdir().context("create scratch dir")?;
            let report = corpus::validate_ground_truth(&corpus, &config.toolchain, scratch.path())?;
            print!("{}", report.to_jsonl()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { run, svg } => {
            let artifacts = emit_report(&run, svg)?;
            for file in &artifacts.files {
                eprintln!("wrote {}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ScoreCode {
            reference,
            cand,
            lang,
        } => {
            let lang = Lang::from_name(&lang)
                .ok_or_else(|| HarnessError::Config(format!("unknown language '{lang}'")))?;
            let ref_text = read(&reference)?;
            let cand_text = read(&cand)?;
            let bundle = codebleu_score(&ref_text, &cand_text, lang, CodeBleuWeights::default())?;
            println!("{}", serde_json::to_string_pretty(&bundle)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::ScoreOutput { reference, cand } => {
            let comparison = output_similarity(&read(&reference)?, &read(&cand)?);
            println!("{}", serde_json::to_string_pretty(&comparison)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::ClassifyErrors {
            stderr,
            strict_table_order,
            rules,
        } => {
            let rules = match rules {
                Some(path) => RuleSet::parse(&read(&path)?)?,
                None if strict_table_order => RuleSet::strict_table_order(),
                None => RuleSet::default_rules(),
            };
            // Wrap the stderr text as a failed compile so classification uses
            // the same path as the pipeline.
            let result = CompileResult {
                status: CompileStatus::Failure,
                stdout_text: String::new(),
                stderr_text: read(&stderr)?,
                exit_code: 1,
                artifact_path: None,
                duration_ms: 0,
            };
            let classification = classify_compile_failure(&result, &rules);
            println!("{}", serde_json::to_string_pretty(&classification)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(models) = &args.models {
        for name in models {
            if !config.models.iter().any(|m| &m.name == name) {
                bail!("model '{name}' is not in the config");
            }
        }
        config.models.retain(|m| models.contains(&m.name));
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            bail!("--trials must be at least 1");
        }
        for model in &mut config.models {
            model.trials_per_task = Some(trials);
        }
    }

    let trials_path = config.output_dir.join(&args.run_id).join("trials.jsonl");
    if trials_path.exists() && !args.resume {
        bail!(
            "{} already exists; pass --resume to continue or pick another --run-id",
            trials_path.display()
        );
    }

    let outcome = run_pipeline(&config, &args.run_id)?;
    let artifacts = emit_report(&outcome.run_dir, false)?;
    eprintln!(
        "run complete: {} trials written, {} skipped (resume), {} transport failures",
        outcome.trials_written, outcome.trials_skipped, outcome.transport_failures
    );
    for file in &artifacts.files {
        eprintln!("wrote {}", file.display());
    }
    if outcome.transport_failures > 0 {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
