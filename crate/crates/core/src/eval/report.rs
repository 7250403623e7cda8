//! Experiment reports and their TSV / JSON forms.
//!
//! Floats are written with four decimals in both formats, so emitting a
//! parsed report reproduces the original bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::metrics::ConfusionCounts;
use crate::error::{Error, Result};
use crate::model::Task;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const RESULT_COLUMNS: [&str; 12] = [
    "setting",
    "system",
    "level",
    "train_sentences",
    "test_sentences",
    "units",
    "tp",
    "fp",
    "tn",
    "fn",
    "ca",
    "f1",
];

pub const EXPRESSION_COLUMNS: [&str; 6] = ["expression", "test_sentences", "units", "gold_positive", "detected", "f1"];

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn ser4<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round4(*v))
}

fn de4<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    f64::deserialize(d).map(round4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Which part of the experiment (`in-training`, `fraction=0.6`, `lang=hr`, ...).
    pub setting: String,
    pub system: String,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub counts: ConfusionCounts,
    #[serde(serialize_with = "ser4", deserialize_with = "de4")]
    pub ca: f64,
    #[serde(serialize_with = "ser4", deserialize_with = "de4")]
    pub f1: f64,
}

impl ResultRow {
    pub fn new(
        setting: impl Into<String>,
        system: impl Into<String>,
        train_sentences: usize,
        test_sentences: usize,
        counts: ConfusionCounts,
    ) -> Self {
        ResultRow {
            setting: setting.into(),
            system: system.into(),
            train_sentences,
            test_sentences,
            ca: counts.accuracy(),
            f1: counts.f1(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionRow {
    pub expression: String,
    pub test_sentences: usize,
    pub units: usize,
    pub gold_positive: usize,
    /// Units predicted idiomatic.
    pub detected: usize,
    #[serde(serialize_with = "ser4", deserialize_with = "de4")]
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    #[serde(serialize_with = "ser4", deserialize_with = "de4")]
    pub bin_low: f64,
    pub count: usize,
}

/// Equal-width bins over `[0, 1]`; a value of exactly 1 lands in the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            bin_low: i as f64 / bins as f64,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub experiment: String,
    /// Split mode and sizes, or another description of the data layout.
    pub split: String,
    pub seed: u64,
    pub results: Vec<ResultRow>,
    #[serde(default)]
    pub expressions: Vec<ExpressionRow>,
    #[serde(default)]
    pub histogram: Vec<HistogramBin>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected tsv or json)")),
        }
    }
}

impl EvalReport {
    pub fn new(experiment: impl Into<String>, split: impl Into<String>, seed: u64) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("version".to_string(), env!("CARGO_PKG_VERSION").to_string());
        EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: experiment.into(),
            split: split.into(),
            seed,
            results: Vec::new(),
            expressions: Vec::new(),
            histogram: Vec::new(),
            metadata,
        }
    }

    /// First row for `system` in `setting`.
    pub fn row(&self, setting: &str, system: &str, level: Task) -> Option<&ResultRow> {
        self.results
            .iter()
            .find(|r| r.setting == setting && r.system == system && r.counts.level == level)
    }

    pub fn results_tsv(&self) -> String {
        let mut out = RESULT_COLUMNS.join("\t");
        out.push('\n');
        for r in &self.results {
            let c = &r.counts;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
                clean(&r.setting),
                clean(&r.system),
                c.level,
                r.train_sentences,
                r.test_sentences,
                c.total(),
                c.tp,
                c.fp,
                c.tn,
                c.fn_,
                r.ca,
                r.f1
            )
            .unwrap();
        }
        out
    }

    pub fn expressions_tsv(&self) -> String {
        let mut out = EXPRESSION_COLUMNS.join("\t");
        out.push('\n');
        for e in &self.expressions {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.4}",
                clean(&e.expression),
                e.test_sentences,
                e.units,
                e.gold_positive,
                e.detected,
                e.f1
            )
            .unwrap();
        }
        out
    }

    pub fn histogram_tsv(&self) -> String {
        let mut out = String::from("bin_low\tcount\n");
        for b in &self.histogram {
            writeln!(out, "{:.4}\t{}", b.bin_low, b.count).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: EvalReport = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported report schema version {}", r.schema_version)));
        }
        Ok(r)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::file(path, e))?)
    }
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n'], " ")
}

/// Writes `<stem>.tsv` (or `<stem>.json`) into `dir`, plus
/// `<stem>.expressions.tsv` and `<stem>.histogram.tsv` for TSV output when
/// the report has per-expression data. Returns the written paths.
pub fn emit_report(report: &EvalReport, format: ReportFormat, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut files = Vec::new();
    match format {
        ReportFormat::Json => files.push((format!("{stem}.json"), report.to_json()?)),
        ReportFormat::Tsv => {
            files.push((format!("{stem}.tsv"), report.results_tsv()));
            if !report.expressions.is_empty() {
                files.push((format!("{stem}.expressions.tsv"), report.expressions_tsv()));
            }
            if !report.histogram.is_empty() {
                files.push((format!("{stem}.histogram.tsv"), report.histogram_tsv()));
            }
        }
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::file(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
