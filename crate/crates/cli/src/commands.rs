//! One function per subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use mice_core::corpus::{
    balanced_detection_set, compute_stats, synthetic_corpus, write_sloie, write_split, AnnotatedSentence,
    SyntheticCorpusConfig,
};
use mice_core::embeddings::{synthetic_provider, write_archive, EmbeddingArchive};
use mice_core::ensemble::FittedEnsemble;
use mice_core::eval::{
    decide, describe_split, emit_report, fit_mixture_from_scores, gold_units, mixture_scores, run_balanced_study,
    run_crosslingual_eval, run_in_training_eval, run_on_split, run_out_of_training_eval, run_per_expression_eval,
    run_size_ablation, vote_scores, ConfusionCounts, CrossLingualTest, EvalReport, FittedSystem, ReportFormat,
    ResultRow,
};
use mice_core::model::{train, Checkpoint, Task};

use crate::config::Settings;
use crate::data::{load_archive, load_archive_file, load_corpus, load_corpus_file, resolve_split};

fn write_reports(report: &EvalReport, out: &Path, stem: &str) -> Result<()> {
    for format in [ReportFormat::Tsv, ReportFormat::Json] {
        for p in emit_report(report, format, out, stem)? {
            info!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn write_split_file(split: &mice_core::corpus::DataSplit, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_split(split, &mut f)?;
    Ok(())
}

pub fn stats(s: &Settings) -> Result<()> {
    let corpus = load_corpus(s)?;
    let stats = compute_stats(&corpus);
    println!("{stats}");
    let out = s.out_dir();
    fs::write(out.join("stats.tsv"), format!("{stats}\n"))?;
    Ok(())
}

pub fn split(s: &Settings) -> Result<()> {
    let corpus = load_corpus(s)?;
    let split = resolve_split(&corpus, s)?;
    let path = s.out_dir().join("split.txt");
    write_split_file(&split, &path)?;
    println!("{}", describe_split(&split));
    Ok(())
}

pub fn train_cmd(s: &Settings) -> Result<()> {
    let corpus = load_corpus(s)?;
    let archive = load_archive(s)?;
    let task = s.task()?;
    let config = s.train_config()?;
    let split = resolve_split(&corpus, s)?;
    let (train_set, _, _) = split.select(&corpus);
    info!("training {task}-level model on {} sentences", train_set.len());
    let outcome = train(&train_set, &archive, task, &config)?;
    let out = s.out_dir();
    write_split_file(&split, &out.join("split.txt"))?;
    let mut trace = String::from("epoch\tloss\n");
    for (i, l) in outcome.epoch_losses.iter().enumerate() {
        trace.push_str(&format!("{}\t{l:.6}\n", i + 1));
    }
    fs::write(out.join("loss.tsv"), trace)?;
    let ckpt = Checkpoint {
        model: outcome.model,
        optimizer: Some(outcome.optimizer),
        config,
        task,
        provider_tag: archive.provider_tag.clone(),
    };
    let path = out.join("model.ckpt");
    ckpt.save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn checkpoint_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "checkpoint".into(), |s| s.to_string_lossy().into_owned())
}

pub fn eval(s: &Settings, checkpoints: &[PathBuf]) -> Result<()> {
    let corpus = load_corpus(s)?;
    let archive = load_archive(s)?;
    let seed = s.seed()?;
    let out = s.out_dir();

    if !checkpoints.is_empty() {
        let split = resolve_split(&corpus, s)?;
        let (train_set, test, _) = split.select(&corpus);
        let mut report = EvalReport::new("checkpoints", describe_split(&split), seed);
        for path in checkpoints {
            let ckpt = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            let system = FittedSystem::Gru(Box::new(ckpt.model));
            let counts = system.evaluate(&test, &archive, ckpt.task)?;
            report.results.push(ResultRow::new(
                "checkpoint",
                checkpoint_name(path),
                train_set.len(),
                test.len(),
                counts,
            ));
        }
        return write_reports(&report, &out, "checkpoints");
    }

    let systems = s.systems()?;
    let task = s.task()?;
    let tasks = [task];
    match s.require("protocol")? {
        "in-training" => write_reports(&run_in_training_eval(&corpus, &archive, &systems, &tasks, seed)?, &out, "in-training"),
        "out-of-training" => write_reports(
            &run_out_of_training_eval(&corpus, &archive, &systems, &tasks, seed)?,
            &out,
            "out-of-training",
        ),
        "split" => {
            let split = resolve_split(&corpus, s)?;
            write_reports(&run_on_split(&corpus, &archive, &split, &systems, &tasks, "split", seed)?, &out, "split")
        }
        "per-expression" => {
            for spec in &systems {
                let report = run_per_expression_eval(&corpus, &archive, spec, task, seed)?;
                write_reports(&report, &out, &format!("per-expression-{}", spec.name()))?;
            }
            Ok(())
        }
        other => bail!("unknown protocol `{other}` (expected in-training, out-of-training, split or per-expression)"),
    }
}

pub fn ensemble(s: &Settings, checkpoints: &[PathBuf], member_archives: &[PathBuf]) -> Result<()> {
    if checkpoints.len() < 2 {
        bail!("an ensemble needs at least two --checkpoint files");
    }
    if !member_archives.is_empty() && member_archives.len() != checkpoints.len() {
        bail!("give one --member-archive per checkpoint, or none to use --archive for all");
    }
    let corpus = load_corpus(s)?;
    let seed = s.seed()?;
    let split = resolve_split(&corpus, s)?;
    let (train_set, test, _) = split.select(&corpus);

    let shared: Option<EmbeddingArchive> = if member_archives.is_empty() { Some(load_archive(s)?) } else { None };
    let mut task: Option<Task> = None;
    let mut train_scores = Vec::new();
    let mut test_scores = Vec::new();
    let mut names = Vec::new();
    for (i, path) in checkpoints.iter().enumerate() {
        let ckpt = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        match task {
            None => task = Some(ckpt.task),
            Some(t) if t != ckpt.task => bail!("checkpoints mix {t} and {} models", ckpt.task),
            _ => {}
        }
        let own;
        let archive = match &shared {
            Some(a) => a,
            None => {
                own = load_archive_file(&member_archives[i])?;
                &own
            }
        };
        let system = FittedSystem::Gru(Box::new(ckpt.model));
        train_scores.push(system.scores(&train_set, archive, ckpt.task)?.concat());
        test_scores.push(system.scores(&test, archive, ckpt.task)?.concat());
        names.push(checkpoint_name(path));
    }
    let task = task.expect("at least two checkpoints");
    let train_gold = gold_units(&train_set, task);
    let test_gold = gold_units(&test, task);
    let mixture = fit_mixture_from_scores(&train_scores, &train_gold, &s.mm_config()?)?;

    let counts = |scores: &[f64]| {
        let mut c = ConfusionCounts::new(task);
        for (&p, &y) in scores.iter().zip(&test_gold) {
            c.record(decide(p), y);
        }
        c
    };
    let mut report = EvalReport::new("ensemble", describe_split(&split), seed);
    let row = |name: &str, c| ResultRow::new("ensemble", name, train_set.len(), test.len(), c);
    for (name, sc) in names.iter().zip(&test_scores) {
        report.results.push(row(name, counts(sc)));
    }
    report.results.push(row("vote", counts(&vote_scores(&test_scores)?)));
    report.results.push(row("mm", counts(&mixture_scores(&mixture, &test_scores)?)));

    let out = s.out_dir();
    FittedEnsemble { members: names, mixture }.save(&out.join("ensemble.bin"))?;
    write_reports(&report, &out, "ensemble")
}

pub fn ablate(s: &Settings) -> Result<()> {
    let corpus = load_corpus(s)?;
    let archive = load_archive(s)?;
    let report = run_size_ablation(&corpus, &archive, &s.systems()?, s.task()?, &s.f64_list("fractions")?, s.seed()?)?;
    write_reports(&report, &s.out_dir(), "size-ablation")
}

pub fn balanced(s: &Settings) -> Result<()> {
    let corpus = load_corpus(s)?;
    let archive = load_archive(s)?;
    let report = run_balanced_study(&corpus, &archive, &s.systems()?, s.task()?, s.seed()?)?;
    write_reports(&report, &s.out_dir(), "balanced")
}

/// `LANG,CORPUS,ARCHIVE`
fn parse_target(spec: &str) -> Result<(String, PathBuf, PathBuf)> {
    match spec.split(',').collect::<Vec<_>>()[..] {
        [lang, corpus, archive] => Ok((lang.to_string(), corpus.into(), archive.into())),
        _ => bail!("bad --target `{spec}` (expected LANG,CORPUS,ARCHIVE)"),
    }
}

pub fn crosslingual(s: &Settings, targets: &[String]) -> Result<()> {
    if targets.is_empty() {
        bail!("give at least one --target LANG,CORPUS,ARCHIVE");
    }
    let seed = s.seed()?;
    let corpus = load_corpus(s)?;
    let archive = load_archive(s)?;
    let mut loaded: Vec<(String, Vec<AnnotatedSentence>, EmbeddingArchive)> = Vec::new();
    for t in targets {
        let (lang, corpus_path, archive_path) = parse_target(t)?;
        let sentences = load_corpus_file(&corpus_path, s)
            .with_context(|| format!("loading {}", corpus_path.display()))?;
        let balanced = balanced_detection_set(&sentences, seed);
        info!("{lang}: {} balanced test sentences", balanced.len());
        loaded.push((lang, balanced, load_archive_file(&archive_path)?));
    }
    let tests: Vec<CrossLingualTest<'_>> = loaded
        .iter()
        .map(|(language, corpus, archive)| CrossLingualTest {
            language: language.clone(),
            corpus,
            archive,
        })
        .collect();
    let report = run_crosslingual_eval(&corpus, &archive, &tests, &s.systems()?, seed)?;
    write_reports(&report, &s.out_dir(), "cross-lingual")
}

pub fn export_report(input: &Path, format: ReportFormat, out: &Path) -> Result<()> {
    let report = EvalReport::read_json(input)?;
    let stem = input
        .file_stem()
        .map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    for p in emit_report(&report, format, out, &stem)? {
        println!("{}", p.display());
    }
    Ok(())
}

/// Writes a synthetic corpus (`corpus.tsv`) and planted-signal archive
/// (`archive.emb`) into the output directory.
pub fn synth(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let corpus = synthetic_corpus(&SyntheticCorpusConfig {
        sentences: s.get("synth_sentences")?,
        expressions: s.get("synth_expressions")?,
        idiomatic_rate: s.get("synth_idiomatic_rate")?,
        language: s.require("language")?.to_string(),
        seed,
        ..SyntheticCorpusConfig::default()
    });
    let signal: f64 = s.get("synth_signal")?;
    let archive = synthetic_provider(&corpus, s.get("synth_dim")?, seed, (signal != 0.0).then_some(signal));
    let out = s.out_dir();
    let corpus_path = out.join("corpus.tsv");
    let mut f = fs::File::create(&corpus_path)?;
    write_sloie(&corpus, &mut f)?;
    write_archive(&archive, out.join("archive.emb"))?;
    println!("{}", corpus_path.display());
    println!("{}", out.join("archive.emb").display());
    Ok(())
}
