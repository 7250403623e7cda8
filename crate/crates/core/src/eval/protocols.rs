//! Experimental protocols. Each trains the requested systems on one part of
//! the data, scores them on another and collects the rows in a report.

use log::info;

use super::metrics::ConfusionCounts;
use super::report::{histogram, EvalReport, ExpressionRow, ResultRow};
use super::systems::{decide, fit_system, SystemSpec};
use crate::corpus::{
    balance_per_expression, size_matched_subset, split_expression_disjoint, split_leave_one_expression_out,
    split_random, split_stratified, subsample, AnnotatedSentence, DataSplit,
};
use crate::embeddings::EmbeddingArchive;
use crate::error::{Error, Result};
use crate::model::{unit_labels, Task};

pub const IN_TRAINING_RATIOS: (f64, f64, f64) = (0.63, 0.30, 0.07);
pub const DISJOINT_TEST_FRACTION: f64 = 0.30;
pub const BALANCED_RATIOS: (f64, f64, f64) = (0.7, 0.3, 0.0);
pub const ABLATION_FRACTIONS: [f64; 6] = [1.0, 0.8, 0.6, 0.4, 0.2, 0.1];
pub const HISTOGRAM_BINS: usize = 10;

pub fn describe_split(split: &DataSplit) -> String {
    format!(
        "{} train={} test={} dev={}",
        split.mode,
        split.train.len(),
        split.test.len(),
        split.dev.len()
    )
}

/// Fits `spec` on `train` and scores it on `test`.
fn run_system(
    spec: &SystemSpec,
    train: &[&AnnotatedSentence],
    test: &[&AnnotatedSentence],
    archive: &EmbeddingArchive,
    task: Task,
) -> Result<ConfusionCounts> {
    let fitted = fit_system(spec, train, archive, task)?;
    fitted.evaluate(test, archive, task)
}

/// Trains and scores every system for every task on a fixed split.
pub fn run_on_split(
    corpus: &[AnnotatedSentence],
    archive: &EmbeddingArchive,
    split: &DataSplit,
    systems: &[SystemSpec],
    tasks: &[Task],
    experiment: &str,
    seed: u64,
) -> Result<EvalReport> {
    split.validate(corpus)?;
    let (train, test, _dev) = split.select(corpus);
    let mut report = EvalReport::new(experiment, describe_split(split), seed);
    for &task in tasks {
        for spec in systems {
            info!("{experiment}: {} at {task} level", spec.name());
            let counts = run_system(spec, &train, &test, archive, task)?;
            report
                .results
                .push(ResultRow::new(experiment, spec.name(), train.len(), test.len(), counts));
        }
    }
    Ok(report)
}

/// Random 63:30:7 split; the same expressions occur in train and test.
pub fn run_in_training_eval(
    corpus: &[AnnotatedSentence],
    archive: &EmbeddingArchive,
    systems: &[SystemSpec],
    tasks: &[Task],
    seed: u64,
) -> Result<EvalReport> {
    let split = split_random(corpus, IN_TRAINING_RATIOS, seed)?;
    run_on_split(corpus, archive, &split, systems, tasks, "in-training", seed)
}

/// Expression-disjoint split: no test expression is seen in training.
pub fn run_out_of_training_eval(
    corpus: &[AnnotatedSentence],
    archive: &EmbeddingArchive,
    systems: &[SystemSpec],
    tasks: &[Task],
    seed: u64,
) -> Result<EvalReport> {
    let split = split_expression_disjoint(corpus, DISJOINT_TEST_FRACTION, seed)?;
    if !split.shared_expressions(corpus).is_empty() {
        return Err(Error::invalid("expression-disjoint split shares expressions"));
    }
    run_on_split(corpus, archive, &split, systems, tasks, "out-of-training", seed)
}

/// Leave-one-expression-out: one row per expression plus a histogram of the
/// per-expression F1 scores. The summary row pools all folds.
pub fn run_per_expression_eval(
    corpus: &[AnnotatedSentence],
    archive: &EmbeddingArchive,
    system: &SystemSpec,
    task: Task,
    seed: u64,
) -> Result<EvalReport> {
    let mut expressions: Vec<&str> = corpus.iter().map(|s| s.expression.as_str()).collect();
    expressions.sort_unstable();
    expressions.dedup();
    if expressions.len() < 2 {
        return Err(Error::invalid("per-expression evaluation needs at least 2 expressions"));
    }
    let mut report = EvalReport::new("per-expression", format!("leave-one-expression-out folds={}", expressions.len()), seed);
    let mut pooled = ConfusionCounts::new(task);
    for expr in &expressions {
        let split = split_leave_one_expression_out(corpus, expr)?;
        if !split.shared_expressions(corpus).is_empty() {
            return Err(Error::invalid(format!("fold for `{expr}` leaks into training")));
        }
        let (train, test, _) = split.select(corpus);
        info!("per-expression: {expr} ({} test sentences)", test.len());
        let fitted = fit_system(system, &train, archive, task)?;
        let scores = fitted.scores(&test, archive, task)?;
        let mut c = ConfusionCounts::new(task);
        for (s, sc) in test.iter().zip(&scores) {
            for (y, &p) in unit_labels(s, task).into_iter().zip(sc) {
                c.record(decide(p), y);
            }
        }
        pooled.merge(&c);
        report.expressions.push(ExpressionRow {
            expression: expr.to_string(),
            test_sentences: test.len(),
            units: c.total(),
            gold_positive: c.gold_positive(),
            detected: c.predicted_positive(),
            f1: c.f1(),
        });
    }
    let f1s: Vec<f64> = report.expressions.iter().map(|e| e.f1).collect();
    report.histogram = histogram(&f1s, HISTOGRAM_BINS);
    report
        .results
        .push(ResultRow::new("pooled", system.name(), corpus.len(), corpus.len(), pooled));
    Ok(report)
}

/// Fixed 63:30:7 split; the training part is subsampled to each fraction
/// while the test part stays the same.
pub fn run_size_ablation(
    corpus: &[AnnotatedSentence],
    archive: &EmbeddingArchive,
    systems: &[SystemSpec],
    task: Task,
    fractions: &[f64],
    seed: u64,
) -> Result<EvalReport> {
    let split = split_random(corpus, IN_TRAINING_RATIOS, seed)?;
    let (train, test, _) = split.select(corpus);
    let train_owned: Vec<AnnotatedSentence> = train.into_iter().cloned().collect();
    let mut report = EvalReport::new("size-ablation", describe_split(&split), seed);
    for &fraction in fractions {
        let part = subsample(&train_owned, fraction, seed)?;
        let part_refs: Vec<&AnnotatedSentence> = part.iter().collect();
        for spec in systems {
            info!("size ablation: {} at fraction {fraction}", spec.name());
            let counts = run_system(spec, &part_refs, &test, archive, task)?;
            report.results.push(ResultRow::new(
                format!("fraction={fraction}"),
                spec.name(),
                part.len(),
                test.len(),
                counts,
            ));
        }
    }
    Ok(report)
}

/// Appends the default classifiers when the caller did not ask for them.
fn with_defaults(systems: &[SystemSpec]) -> Vec<SystemSpec> {
    let mut all = systems.to_vec();
    for d in [SystemSpec::Majority, SystemSpec::AllPositive] {
        if !all.contains(&d) {
            all.push(d);
        }
    }
    all
}

/// Trains on a per-expression balanced corpus and on a size-matched subset
/// with the natural label mix. Both are split 70:30, stratified by label.
pub fn run_balanced_study(
    corpus: &[AnnotatedSentence],
    archive: &EmbeddingArchive,
    systems: &[SystemSpec],
    task: Task,
    seed: u64,
) -> Result<EvalReport> {
    let balanced = balance_per_expression(corpus, seed);
    if balanced.is_empty() {
        return Err(Error::invalid("no expression has both idiomatic and literal sentences"));
    }
    let imbalanced = size_matched_subset(corpus, &balanced, seed);
    let systems = with_defaults(systems);
    let mut report = EvalReport::new(
        "balanced",
        format!("stratified 70:30 balanced={} imbalanced={}", balanced.len(), imbalanced.len()),
        seed,
    );
    for (setting, data) in [("balanced", &balanced), ("imbalanced", &imbalanced)] {
        let split = split_stratified(data, BALANCED_RATIOS, seed)?;
        let (train, test, _) = split.select(data);
        for spec in &systems {
            info!("balanced study: {} on {setting}", spec.name());
            let counts = run_system(spec, &train, &test, archive, task)?;
            report
                .results
                .push(ResultRow::new(setting, spec.name(), train.len(), test.len(), counts));
        }
    }
    Ok(report)
}

/// One target language for cross-lingual evaluation.
pub struct CrossLingualTest<'a> {
    pub language: String,
    /// Balanced idiomatic / literal sentence set.
    pub corpus: &'a [AnnotatedSentence],
    pub archive: &'a EmbeddingArchive,
}

/// Trains once on `train` and scores sentence-level detection on each
/// target language. The all-positive row is the reference line.
pub fn run_crosslingual_eval(
    train: &[AnnotatedSentence],
    train_archive: &EmbeddingArchive,
    tests: &[CrossLingualTest<'_>],
    systems: &[SystemSpec],
    seed: u64,
) -> Result<EvalReport> {
    let task = Task::Sentence;
    let train_refs: Vec<&AnnotatedSentence> = train.iter().collect();
    let mut systems = systems.to_vec();
    if !systems.contains(&SystemSpec::AllPositive) {
        systems.push(SystemSpec::AllPositive);
    }
    let languages: Vec<&str> = tests.iter().map(|t| t.language.as_str()).collect();
    let mut report = EvalReport::new("cross-lingual", format!("train={} targets={}", train.len(), languages.join(",")), seed);
    for spec in &systems {
        info!("cross-lingual: fitting {}", spec.name());
        let fitted = fit_system(spec, &train_refs, train_archive, task)?;
        for t in tests {
            let test_refs: Vec<&AnnotatedSentence> = t.corpus.iter().collect();
            let counts = fitted.evaluate(&test_refs, t.archive, task)?;
            report.results.push(ResultRow::new(
                format!("lang={}", t.language),
                spec.name(),
                train.len(),
                t.corpus.len(),
                counts,
            ));
        }
    }
    Ok(report)
}
