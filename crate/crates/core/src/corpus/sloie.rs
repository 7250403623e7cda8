//! SloIE-style TSV: `id  expression  annA  annB  tokens  mask`, one sentence
//! per line. Tokens and mask entries are space-separated; the mask uses
//! `I` (idiomatic), `L` (literal expression member) and `O` (outside).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AnnotatedSentence, AnnotatorLabel, TokenLabel};
use crate::error::{Error, Result};

const COLUMNS: usize = 6;

pub fn load_sloie(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_sloie(&text, "sl")
}

/// Parses TSV text. Blank lines are ignored; any other malformed line is an
/// error carrying its 1-based line number.
pub fn parse_sloie(text: &str, language: &str) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(Error::parse(
                line_no,
                format!("expected {COLUMNS} tab-separated columns, found {}", cols.len()),
            ));
        }
        let [id, expression, ann_a, ann_b, tokens, mask] = [0, 1, 2, 3, 4, 5].map(|c| cols[c]);
        if id.is_empty() {
            return Err(Error::parse(line_no, "empty sentence id"));
        }
        if expression.trim().is_empty() {
            return Err(Error::parse(line_no, "empty expression"));
        }
        let ann_a: AnnotatorLabel = ann_a.parse().map_err(|e| Error::parse(line_no, e))?;
        let ann_b: AnnotatorLabel = ann_b.parse().map_err(|e| Error::parse(line_no, e))?;
        let tokens: Vec<String> = tokens.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::parse(line_no, "sentence has no tokens"));
        }
        let labels = mask
            .split_whitespace()
            .map(|c| {
                TokenLabel::from_code(c)
                    .ok_or_else(|| Error::parse(line_no, format!("bad mask label `{c}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if labels.len() != tokens.len() {
            return Err(Error::MaskLength {
                line: line_no,
                tokens: tokens.len(),
                mask: labels.len(),
            });
        }
        out.push(AnnotatedSentence::new(
            id,
            language,
            tokens,
            expression.trim(),
            labels,
            ann_a,
            ann_b,
        )?);
    }
    Ok(out)
}

pub fn write_sloie(sentences: &[AnnotatedSentence], mut w: impl Write) -> Result<()> {
    for s in sentences {
        if s.tokens.iter().any(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(Error::invalid(format!(
                "sentence {}: tokens must be non-empty and free of whitespace",
                s.id
            )));
        }
        let mask: Vec<String> = s.token_labels.iter().map(|l| l.code().to_string()).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.id,
            s.expression,
            s.annotator_a,
            s.annotator_b,
            s.tokens.join(" "),
            mask.join(" ")
        )?;
    }
    Ok(())
}
