//! Annotated idiom corpora.
//!
//! A corpus is a plain `Vec<AnnotatedSentence>`; every operation here is a
//! pure function of its inputs (and a seed where randomness is involved).

mod cupt;
mod sloie;
mod split;
mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use cupt::{
    cupt_to_annotated, load_cupt, parse_cupt, write_cupt, CuptRow, CuptSentence, MweSpan,
};
pub use sloie::{load_sloie, parse_sloie, write_sloie};
pub use split::{
    read_split, split_expression_disjoint, split_leave_one_expression_out, split_random,
    split_stratified, write_split, DataSplit, SplitMode,
};
pub use synthetic::{synthetic_corpus, SyntheticCorpusConfig};

/// One annotator's judgement of a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnotatorLabel {
    Yes,
    No,
    DontKnow,
    Vague,
}

impl AnnotatorLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotatorLabel::Yes => "YES",
            AnnotatorLabel::No => "NO",
            AnnotatorLabel::DontKnow => "DONT_KNOW",
            AnnotatorLabel::Vague => "VAGUE",
        }
    }
}

impl FromStr for AnnotatorLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "YES" | "Y" => Ok(AnnotatorLabel::Yes),
            "NO" | "N" => Ok(AnnotatorLabel::No),
            "DONT_KNOW" | "DONTKNOW" | "DK" | "DN" => Ok(AnnotatorLabel::DontKnow),
            "VAGUE" => Ok(AnnotatorLabel::Vague),
            other => Err(format!("unknown annotator label `{other}`")),
        }
    }
}

impl fmt::Display for AnnotatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenLabel {
    /// Member of the expression, used idiomatically.
    Idiomatic,
    /// Member of the expression, used literally.
    LiteralExpr,
    Outside,
}

impl TokenLabel {
    pub fn code(self) -> char {
        match self {
            TokenLabel::Idiomatic => 'I',
            TokenLabel::LiteralExpr => 'L',
            TokenLabel::Outside => 'O',
        }
    }

    pub fn from_code(c: &str) -> Option<Self> {
        match c {
            "I" => Some(TokenLabel::Idiomatic),
            "L" => Some(TokenLabel::LiteralExpr),
            "O" => Some(TokenLabel::Outside),
            _ => None,
        }
    }

    pub fn is_idiomatic(self) -> bool {
        self == TokenLabel::Idiomatic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SentenceLabel {
    Idiomatic,
    Literal,
}

impl SentenceLabel {
    pub fn is_idiomatic(self) -> bool {
        self == SentenceLabel::Idiomatic
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: String,
    pub language: String,
    pub tokens: Vec<String>,
    pub expression: String,
    pub token_labels: Vec<TokenLabel>,
    pub sentence_label: SentenceLabel,
    pub annotator_a: AnnotatorLabel,
    pub annotator_b: AnnotatorLabel,
}

impl AnnotatedSentence {
    /// Builds a sentence, deriving the sentence label from the token labels.
    pub fn new(
        id: impl Into<String>,
        language: impl Into<String>,
        tokens: Vec<String>,
        expression: impl Into<String>,
        token_labels: Vec<TokenLabel>,
        annotator_a: AnnotatorLabel,
        annotator_b: AnnotatorLabel,
    ) -> Result<Self> {
        let expression = expression.into();
        if expression.is_empty() {
            return Err(Error::invalid("expression must be non-empty"));
        }
        if tokens.len() != token_labels.len() {
            return Err(Error::Shape(format!(
                "{} tokens but {} token labels",
                tokens.len(),
                token_labels.len()
            )));
        }
        let sentence_label = if token_labels.iter().any(|l| l.is_idiomatic()) {
            SentenceLabel::Idiomatic
        } else {
            SentenceLabel::Literal
        };
        Ok(AnnotatedSentence {
            id: id.into(),
            language: language.into(),
            tokens,
            expression,
            token_labels,
            sentence_label,
            annotator_a,
            annotator_b,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_idiomatic(&self) -> bool {
        self.sentence_label.is_idiomatic()
    }
}

/// Keeps sentences on which both annotators agree on YES or NO.
pub fn filter_agreement(sentences: &[AnnotatedSentence]) -> Vec<AnnotatedSentence> {
    sentences
        .iter()
        .filter(|s| {
            s.annotator_a == s.annotator_b
                && matches!(s.annotator_a, AnnotatorLabel::Yes | AnnotatorLabel::No)
        })
        .cloned()
        .collect()
}

/// Raw agreement: the fraction of sentences with identical annotator labels.
pub fn inter_annotator_agreement(sentences: &[AnnotatedSentence]) -> Result<f64> {
    if sentences.is_empty() {
        return Err(Error::invalid("agreement of an empty corpus is undefined"));
    }
    let agree = sentences
        .iter()
        .filter(|s| s.annotator_a == s.annotator_b)
        .count();
    Ok(agree as f64 / sentences.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub idiomatic_sentences: usize,
    pub literal_sentences: usize,
    pub idiomatic_tokens: usize,
    /// Every token that is not labelled idiomatic.
    pub literal_tokens: usize,
    pub expressions: usize,
}

impl CorpusStats {
    /// Both partition identities hold.
    pub fn is_consistent(&self) -> bool {
        self.idiomatic_sentences + self.literal_sentences == self.sentences
            && self.idiomatic_tokens + self.literal_tokens == self.tokens
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sentences\t{}", self.sentences)?;
        writeln!(f, "tokens\t{}", self.tokens)?;
        writeln!(f, "idiomatic_sentences\t{}", self.idiomatic_sentences)?;
        writeln!(f, "literal_sentences\t{}", self.literal_sentences)?;
        writeln!(f, "idiomatic_tokens\t{}", self.idiomatic_tokens)?;
        writeln!(f, "literal_tokens\t{}", self.literal_tokens)?;
        write!(f, "expressions\t{}", self.expressions)
    }
}

pub fn compute_stats(sentences: &[AnnotatedSentence]) -> CorpusStats {
    let mut stats = CorpusStats {
        sentences: sentences.len(),
        ..CorpusStats::default()
    };
    let mut expressions = std::collections::HashSet::new();
    for s in sentences {
        stats.tokens += s.tokens.len();
        let idiomatic = s.token_labels.iter().filter(|l| l.is_idiomatic()).count();
        stats.idiomatic_tokens += idiomatic;
        stats.literal_tokens += s.tokens.len() - idiomatic;
        if s.is_idiomatic() {
            stats.idiomatic_sentences += 1;
        } else {
            stats.literal_sentences += 1;
        }
        expressions.insert(s.expression.as_str());
    }
    stats.expressions = expressions.len();
    stats
}

/// Uniform random subset of `round(fraction · N)` sentences, in corpus order.
pub fn subsample(
    sentences: &[AnnotatedSentence],
    fraction: f64,
    seed: u64,
) -> Result<Vec<AnnotatedSentence>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "subsample fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n = (fraction * sentences.len() as f64).round() as usize;
    let mut idx: Vec<usize> = (0..sentences.len()).collect();
    idx.shuffle(&mut rng::substream(seed, "subsample"));
    let mut keep = idx[..n].to_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| sentences[i].clone()).collect())
}

/// Groups sentence indices by expression, expressions in sorted order.
pub(crate) fn indices_by_expression(sentences: &[AnnotatedSentence]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in sentences.iter().enumerate() {
        groups.entry(s.expression.as_str()).or_default().push(i);
    }
    groups
}

/// Keeps `k = min(#idiomatic, #literal)` sentences of each label per
/// expression; expressions with `k = 0` disappear. Corpus order is preserved.
pub fn balance_per_expression(sentences: &[AnnotatedSentence], seed: u64) -> Vec<AnnotatedSentence> {
    let mut rng = rng::substream(seed, "balance");
    let mut keep = Vec::new();
    for (_, idx) in indices_by_expression(sentences) {
        let (mut idiomatic, mut literal): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| sentences[i].is_idiomatic());
        let k = idiomatic.len().min(literal.len());
        if k == 0 {
            continue;
        }
        idiomatic.shuffle(&mut rng);
        literal.shuffle(&mut rng);
        keep.extend_from_slice(&idiomatic[..k]);
        keep.extend_from_slice(&literal[..k]);
    }
    keep.sort_unstable();
    keep.into_iter().map(|i| sentences[i].clone()).collect()
}

/// For each expression, a uniform random subset whose size matches that
/// expression's count in `reference` (typically a balanced corpus). The
/// result has the same per-expression sizes but keeps the natural label mix.
pub fn size_matched_subset(
    sentences: &[AnnotatedSentence],
    reference: &[AnnotatedSentence],
    seed: u64,
) -> Vec<AnnotatedSentence> {
    let mut target: HashMap<&str, usize> = HashMap::new();
    for s in reference {
        *target.entry(s.expression.as_str()).or_default() += 1;
    }
    let mut rng = rng::substream(seed, "size-matched");
    let mut keep = Vec::new();
    for (expr, mut idx) in indices_by_expression(sentences) {
        let k = target.get(expr).copied().unwrap_or(0).min(idx.len());
        idx.shuffle(&mut rng);
        keep.extend_from_slice(&idx[..k]);
    }
    keep.sort_unstable();
    keep.into_iter().map(|i| sentences[i].clone()).collect()
}

/// All idiomatic sentences plus an equal number of literal ones drawn at
/// random (or every literal one when there are fewer). Used to build
/// cross-lingual test sets from `.cupt` corpora.
pub fn balanced_detection_set(sentences: &[AnnotatedSentence], seed: u64) -> Vec<AnnotatedSentence> {
    let (idiomatic, mut literal): (Vec<usize>, Vec<usize>) =
        (0..sentences.len()).partition(|&i| sentences[i].is_idiomatic());
    literal.shuffle(&mut rng::substream(seed, "balanced-detection"));
    literal.truncate(idiomatic.len());
    let mut keep = idiomatic;
    keep.extend(literal);
    keep.sort_unstable();
    keep.into_iter().map(|i| sentences[i].clone()).collect()
}
