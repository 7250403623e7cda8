//! Loading corpora, archives and splits named in the settings.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use mice_core::corpus::{
    cupt_to_annotated, filter_agreement, load_cupt, load_sloie, read_split, split_expression_disjoint,
    split_leave_one_expression_out, split_random, split_stratified, AnnotatedSentence, DataSplit, SplitMode,
};
use mice_core::embeddings::{open_archive, EmbeddingArchive};

use crate::config::Settings;

/// Reads a SloIE-style TSV corpus or a `.cupt` file.
pub fn load_corpus_file(path: &Path, settings: &Settings) -> Result<Vec<AnnotatedSentence>> {
    let format = settings.require("corpus_format")?;
    let is_cupt = match format {
        "auto" => path.extension().is_some_and(|e| e == "cupt"),
        "cupt" => true,
        "sloie" | "tsv" => false,
        other => bail!("unknown corpus format `{other}` (expected auto, sloie or cupt)"),
    };
    let language = settings.require("language")?;
    let sentences = if is_cupt {
        let categories = settings.list("categories")?;
        let keep: Vec<&str> = categories.iter().map(String::as_str).collect();
        load_cupt(path, Some(&keep))?
            .iter()
            .map(|s| cupt_to_annotated(s, language))
            .collect()
    } else {
        let mut s = load_sloie(path)?;
        for x in s.iter_mut() {
            x.language = language.to_string();
        }
        if settings.get::<bool>("agreement_filter")? {
            let before = s.len();
            s = filter_agreement(&s);
            info!("kept {} of {before} sentences with annotator agreement", s.len());
        }
        s
    };
    Ok(sentences)
}

pub fn load_corpus(settings: &Settings) -> Result<Vec<AnnotatedSentence>> {
    let path = settings.existing_path("corpus")?;
    load_corpus_file(&path, settings).with_context(|| format!("loading corpus {}", path.display()))
}

pub fn load_archive_file(path: &Path) -> Result<EmbeddingArchive> {
    if !path.exists() {
        bail!("archive {} does not exist", path.display());
    }
    open_archive(path).with_context(|| format!("opening archive {}", path.display()))
}

pub fn load_archive(settings: &Settings) -> Result<EmbeddingArchive> {
    load_archive_file(&settings.existing_path("archive")?)
}

/// The split from `split_file` if set, otherwise computed from `split_mode`.
pub fn resolve_split(corpus: &[AnnotatedSentence], settings: &Settings) -> Result<DataSplit> {
    if let Some(file) = settings.raw("split_file") {
        let f = fs::File::open(file).with_context(|| format!("opening split {file}"))?;
        let split = read_split(BufReader::new(f))?;
        split.validate(corpus)?;
        return Ok(split);
    }
    let seed = settings.seed()?;
    Ok(match settings.split_mode()? {
        SplitMode::Random => split_random(corpus, settings.split_ratios()?, seed)?,
        SplitMode::Stratified => split_stratified(corpus, settings.split_ratios()?, seed)?,
        SplitMode::ExpressionDisjoint => split_expression_disjoint(corpus, settings.get("test_fraction")?, seed)?,
        SplitMode::LeaveOneExpressionOut => split_leave_one_expression_out(corpus, settings.require("expression")?)?,
    })
}
