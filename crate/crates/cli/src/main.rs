//! `mice`: idiom-detection experiments from the command line.

mod commands;
mod config;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mice_core::eval::ReportFormat;

use config::Settings;

#[derive(Args, Clone, Default)]
struct Common {
    /// `key = value` experiment file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// token or sentence
    #[arg(long, global = true)]
    task: Option<String>,
    /// Embedding archive.
    #[arg(long, global = true)]
    archive: Option<PathBuf>,
    /// Annotated corpus (.tsv or .cupt).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Any other setting as key=value; repeatable.
    #[arg(long = "set", short = 's', global = true, value_parser = parse_key_value)]
    set: Vec<(String, String)>,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

#[derive(Subcommand)]
enum Command {
    /// Print corpus statistics.
    Stats,
    /// Write a train/test/dev split.
    Split,
    /// Train a biGRU and write a checkpoint.
    Train,
    /// Train and score systems with an evaluation protocol, or score checkpoints.
    Eval {
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
    },
    /// Combine checkpoints with voting and the mixture ensemble.
    Ensemble {
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
        /// Archive per checkpoint, in the same order.
        #[arg(long)]
        member_archive: Vec<PathBuf>,
    },
    /// Training-set size ablation.
    Ablate,
    /// Balanced versus size-matched imbalanced training data.
    Balanced,
    /// Train on one language, test on others.
    Crosslingual {
        /// LANG,CORPUS,ARCHIVE; repeatable.
        #[arg(long = "target")]
        targets: Vec<String>,
    },
    /// Re-emit a JSON report as TSV or JSON.
    ExportReport {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: ReportFormat,
    },
    /// Generate a synthetic corpus and planted-signal archive.
    Synth,
}

#[derive(Parser)]
#[command(name = "mice", version, about = "Idiomatic-expression detection experiments")]
struct Full {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn settings(common: &Common) -> Result<Settings> {
    let mut overrides = common.set.clone();
    let mut flag = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            overrides.push((k.to_string(), v));
        }
    };
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    flag("seed", common.seed.map(|s| s.to_string()));
    flag("out", path(&common.out));
    flag("task", common.task.clone());
    flag("archive", path(&common.archive));
    flag("corpus", path(&common.corpus));
    Settings::resolve(common.config.as_deref(), &overrides)
}

fn run(full: Full) -> Result<()> {
    let s = settings(&full.common)?;
    let out = s.out_dir();
    if let Command::ExportReport { input, format } = &full.command {
        return commands::export_report(input, *format, &out);
    }
    s.echo(&out)?;
    match &full.command {
        Command::Stats => commands::stats(&s),
        Command::Split => commands::split(&s),
        Command::Train => commands::train_cmd(&s),
        Command::Eval { checkpoint } => commands::eval(&s, checkpoint),
        Command::Ensemble { checkpoint, member_archive } => commands::ensemble(&s, checkpoint, member_archive),
        Command::Ablate => commands::ablate(&s),
        Command::Balanced => commands::balanced(&s),
        Command::Crosslingual { targets } => commands::crosslingual(&s, targets),
        Command::Synth => commands::synth(&s),
        Command::ExportReport { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let full = Full::parse();
    match run(full) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
