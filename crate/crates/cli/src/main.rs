//! `chronoinfo`: validate, analyze and verify time-indexed process chains.
//!
//! Exit codes: 0 ok, 1 unreadable or malformed file, 2 invalid chain, 3 bad
//! flags or frame anchor, 4 a law verdict failed.

mod analyze;
mod document;
mod laws;
mod num;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chronoinfo::blackhole::DEFAULT_NATURAL_THRESHOLD;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::document::Document;

#[derive(Debug, Parser)]
#[command(name = "chronoinfo", version, about = "Time-indexed information measures on process chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a chain file against every chain invariant.
    Validate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Per-stage measures, optionally under a frame anchored at a stage.
    Analyze {
        path: PathBuf,
        /// Stage index whose moment closes the observation window.
        #[arg(long)]
        frame_anchor: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Largest transition probability classified as a natural variation.
        #[arg(long, default_value_t = DEFAULT_NATURAL_THRESHOLD)]
        threshold: f64,
        /// Directory for step-effect and entropy CSV series.
        #[arg(long)]
        plot_out: Option<PathBuf>,
    },
    /// Evaluate the entropy and conservation laws on a file or on random chains.
    VerifyLaws {
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        path: Option<PathBuf>,
        /// Generate TRIALS random chains from SEED and check them against the exact oracle.
        #[arg(long, num_args = 2, value_names = ["TRIALS", "SEED"])]
        random: Option<Vec<u64>>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

enum Failure {
    Load(String),
    Invalid(String),
    Usage(String),
    Law(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Load(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Usage(_) => 3,
            Failure::Law(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                // Reports for these have already been written to stdout.
                Failure::Invalid(msg) | Failure::Law(msg) => eprintln!("{msg}"),
                Failure::Load(msg) | Failure::Usage(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn emit(format: Format, text: String, json: Value) {
    match format {
        Format::Text => print!("{text}"),
        Format::Json => {
            let s = serde_json::to_string_pretty(&json).expect("report serializes");
            println!("{s}");
        }
    }
}

fn load(path: &Path) -> Result<Document, Failure> {
    document::load(path).map_err(|e| Failure::Load(e.to_string()))
}

/// Prints the violation report and fails if the chain is invalid.
fn require_valid(doc: &Document, format: Format) -> Result<(), Failure> {
    let report = validate::validate(doc);
    if report.is_ok() {
        return Ok(());
    }
    emit(format, report.text(), report.json());
    Err(Failure::Invalid(format!(
        "{}: invalid chain ({} violation(s))",
        doc.name,
        report.violations.len()
    )))
}

fn engine(e: chronoinfo::Error) -> Failure {
    match e {
        chronoinfo::Error::MissingRealization { .. } | chronoinfo::Error::StageOutOfRange { .. } => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Invalid(other.to_string()),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { path, format } => {
            let doc = load(&path)?;
            require_valid(&doc, format)?;
            let report = validate::validate(&doc);
            emit(format, report.text(), report.json());
            Ok(())
        }
        Command::Analyze {
            path,
            frame_anchor,
            format,
            threshold,
            plot_out,
        } => {
            if !(threshold.is_finite() && (0.0..1.0).contains(&threshold)) {
                return Err(Failure::Usage(format!(
                    "--threshold must lie in [0, 1), got {threshold}"
                )));
            }
            let doc = load(&path)?;
            require_valid(&doc, format)?;
            let anchor = frame_anchor.or(doc.frame);
            if let Some(a) = anchor {
                if a >= doc.chain.len() {
                    return Err(Failure::Usage(format!(
                        "frame anchor {a} is out of range for {} stage(s)",
                        doc.chain.len()
                    )));
                }
            }
            let report = analyze::analyze(&doc, anchor, threshold).map_err(engine)?;
            if let Some(dir) = plot_out {
                report
                    .write_plots(&dir)
                    .map_err(|e| Failure::Load(format!("{}: {e}", dir.display())))?;
            }
            emit(format, report.text(), report.json());
            Ok(())
        }
        Command::VerifyLaws {
            path,
            random,
            format,
        } => match (path, random) {
            (_, Some(args)) => {
                let (trials, seed) = (args[0], args[1]);
                let report = laws::verify_random(trials, seed);
                emit(format, report.text(), report.json());
                if report.passed() {
                    Ok(())
                } else {
                    Err(Failure::Law("random verification failed".into()))
                }
            }
            (Some(path), None) => {
                let doc = load(&path)?;
                require_valid(&doc, format)?;
                let report = laws::verify(&doc).map_err(engine)?;
                emit(format, report.text(), report.json());
                if report.passed() {
                    Ok(())
                } else {
                    Err(Failure::Law(format!(
                        "{}: {} law verdict(s) failed",
                        doc.name,
                        report.counts().fail
                    )))
                }
            }
            (None, None) => Err(Failure::Usage("a path or --random is required".into())),
        },
    }
}
