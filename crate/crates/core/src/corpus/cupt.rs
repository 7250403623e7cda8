//! PARSEME `.cupt` reader and writer.
//!
//! Ten CoNLL-U columns plus an eleventh MWE column whose cells are `*` (no
//! MWE), `_` (not annotated), or a `;`-separated list of `N` / `N:CATEGORY`
//! codes. The category is attached to the first token of each MWE; later
//! tokens repeat the bare id.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotatedSentence, AnnotatorLabel, TokenLabel};
use crate::error::{Error, Result};

const COLUMNS: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuptRow {
    /// 1-based token id.
    pub token_index: usize,
    pub form: String,
    /// Raw MWE cell as read.
    pub mwe_column: String,
    /// All eleven raw columns, used when writing the sentence back out.
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweSpan {
    pub mwe_id: u32,
    pub category: String,
    pub tokens: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuptSentence {
    pub sentence_id: String,
    /// Comment lines without the leading `#`.
    pub comments: Vec<String>,
    pub rows: Vec<CuptRow>,
    pub mwe_spans: Vec<MweSpan>,
}

impl CuptSentence {
    pub fn has_span(&self) -> bool {
        !self.mwe_spans.is_empty()
    }
}

/// Reads a `.cupt` file, keeping only spans whose category is listed in
/// `keep_categories` (`None` keeps every span).
pub fn load_cupt(path: impl AsRef<Path>, keep_categories: Option<&[&str]>) -> Result<Vec<CuptSentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_cupt(&text, keep_categories)
}

pub fn parse_cupt(text: &str, keep_categories: Option<&[&str]>) -> Result<Vec<CuptSentence>> {
    let mut sentences = Vec::new();
    let mut builder = SentenceBuilder::default();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        if line.trim().is_empty() {
            if let Some(s) = builder.finish(sentences.len(), keep_categories, line_no)? {
                sentences.push(s);
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            builder.comments.push(comment.trim_start().to_owned());
            continue;
        }
        builder.push_row(line, line_no)?;
    }
    if let Some(s) = builder.finish(sentences.len(), keep_categories, last_line)? {
        sentences.push(s);
    }
    Ok(sentences)
}

#[derive(Default)]
struct SentenceBuilder {
    comments: Vec<String>,
    rows: Vec<CuptRow>,
    spans: BTreeMap<u32, MweSpan>,
}

impl SentenceBuilder {
    fn push_row(&mut self, line: &str, line_no: usize) -> Result<()> {
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if fields.len() != COLUMNS {
            return Err(Error::parse(
                line_no,
                format!("expected {COLUMNS} columns, found {}", fields.len()),
            ));
        }
        // Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are not tokens.
        if fields[0].contains('-') || fields[0].contains('.') {
            return Ok(());
        }
        let token_index: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad token id `{}`", fields[0])))?;
        if let Some(prev) = self.rows.last() {
            if token_index <= prev.token_index {
                return Err(Error::parse(
                    line_no,
                    format!("token id {token_index} does not increase"),
                ));
            }
        }
        let mwe = fields[10].trim().to_owned();
        if mwe != "*" && mwe != "_" {
            for code in mwe.split(';') {
                let (id, category) = match code.split_once(':') {
                    Some((id, cat)) => (id, Some(cat)),
                    None => (code, None),
                };
                let id: u32 = id
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad MWE code `{code}`")))?;
                match category {
                    Some(cat) => {
                        if cat.is_empty() {
                            return Err(Error::parse(line_no, format!("empty category in `{code}`")));
                        }
                        if self.spans.contains_key(&id) {
                            return Err(Error::parse(
                                line_no,
                                format!("MWE {id} given a category twice"),
                            ));
                        }
                        self.spans.insert(
                            id,
                            MweSpan {
                                mwe_id: id,
                                category: cat.to_owned(),
                                tokens: BTreeSet::from([token_index]),
                            },
                        );
                    }
                    None => match self.spans.get_mut(&id) {
                        Some(span) => {
                            span.tokens.insert(token_index);
                        }
                        None => {
                            return Err(Error::parse(
                                line_no,
                                format!("MWE {id} continued before its category was defined"),
                            ))
                        }
                    },
                }
            }
        }
        self.rows.push(CuptRow {
            token_index,
            form: fields[1].clone(),
            mwe_column: mwe,
            fields,
        });
        Ok(())
    }

    fn finish(
        &mut self,
        ordinal: usize,
        keep: Option<&[&str]>,
        line_no: usize,
    ) -> Result<Option<CuptSentence>> {
        let comments = std::mem::take(&mut self.comments);
        let rows = std::mem::take(&mut self.rows);
        let spans = std::mem::take(&mut self.spans);
        if rows.is_empty() {
            if comments.is_empty() {
                return Ok(None);
            }
            return Err(Error::parse(line_no, "comment block without token rows"));
        }
        let sentence_id = comments
            .iter()
            .find_map(|c| {
                let (key, value) = c.split_once('=')?;
                matches!(key.trim(), "source_sent_id" | "sent_id").then(|| value.trim().to_owned())
            })
            .unwrap_or_else(|| format!("cupt-{}", ordinal + 1));
        let mwe_spans = spans
            .into_values()
            .filter(|s| keep.is_none_or(|k| k.contains(&s.category.as_str())))
            .collect();
        Ok(Some(CuptSentence {
            sentence_id,
            comments,
            rows,
            mwe_spans,
        }))
    }
}

/// Writes sentences back to `.cupt`, regenerating the MWE column from the
/// retained spans (filtered-out spans become `*`).
pub fn write_cupt(sentences: &[CuptSentence], mut w: impl Write) -> Result<()> {
    for s in sentences {
        for c in &s.comments {
            writeln!(w, "# {c}")?;
        }
        let mut codes: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut spans: Vec<&MweSpan> = s.mwe_spans.iter().collect();
        spans.sort_by_key(|sp| sp.mwe_id);
        for span in spans {
            let Some(&first) = span.tokens.iter().next() else {
                continue;
            };
            for &t in &span.tokens {
                let code = if t == first {
                    format!("{}:{}", span.mwe_id, span.category)
                } else {
                    span.mwe_id.to_string()
                };
                codes.entry(t).or_default().push(code);
            }
        }
        for row in &s.rows {
            let mwe = match codes.get(&row.token_index) {
                Some(c) => c.join(";"),
                None if row.mwe_column == "_" => "_".to_owned(),
                None => "*".to_owned(),
            };
            let mut fields = row.fields.clone();
            fields.resize(COLUMNS, "_".to_owned());
            fields[0] = row.token_index.to_string();
            fields[1] = row.form.clone();
            fields[10] = mwe;
            writeln!(w, "{}", fields.join("\t"))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Converts a `.cupt` sentence to the annotated form: tokens covered by any
/// span (union over overlapping spans) are idiomatic, everything else is
/// outside. Annotator fields are set to an agreeing YES/NO pair.
pub fn cupt_to_annotated(sentence: &CuptSentence, language: &str) -> AnnotatedSentence {
    let covered: BTreeSet<usize> = sentence
        .mwe_spans
        .iter()
        .flat_map(|s| s.tokens.iter().copied())
        .collect();
    let tokens: Vec<String> = sentence.rows.iter().map(|r| r.form.clone()).collect();
    let labels: Vec<TokenLabel> = sentence
        .rows
        .iter()
        .map(|r| {
            if covered.contains(&r.token_index) {
                TokenLabel::Idiomatic
            } else {
                TokenLabel::Outside
            }
        })
        .collect();
    let expression = sentence
        .mwe_spans
        .first()
        .map(|span| {
            sentence
                .rows
                .iter()
                .filter(|r| span.tokens.contains(&r.token_index))
                .map(|r| r.form.to_lowercase())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .filter(|e| !e.is_empty())
        .unwrap_or_else(|| "_".to_owned());
    let ann = if covered.is_empty() {
        AnnotatorLabel::No
    } else {
        AnnotatorLabel::Yes
    };
    AnnotatedSentence::new(
        sentence.sentence_id.clone(),
        language,
        tokens,
        expression,
        labels,
        ann,
        ann,
    )
    .expect("labels are built one per row")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: usize, form: &str, mwe: &str) -> String {
        format!("{id}\t{form}\t{form}\tVERB\t_\t_\t0\troot\t_\t_\t{mwe}")
    }

    fn sentence(rows: &[(&str, &str)]) -> String {
        let mut s = String::from("# source_sent_id = test s1\n");
        for (i, (form, mwe)) in rows.iter().enumerate() {
            s.push_str(&row(i + 1, form, mwe));
            s.push('\n');
        }
        s
    }

    #[test]
    fn three_token_span_parse() {
        let text = sentence(&[("vrgel", "1:VID"), ("puško", "1"), ("v", "*")]);
        let parsed = parse_cupt(&text, Some(&["VID"])).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].sentence_id, "test s1");
        assert_eq!(
            parsed[0].mwe_spans,
            vec![MweSpan {
                mwe_id: 1,
                category: "VID".into(),
                tokens: BTreeSet::from([1, 2])
            }]
        );
    }

    #[test]
    fn all_star_means_no_spans() {
        let text = sentence(&[("a", "*"), ("b", "*")]);
        assert!(parse_cupt(&text, None).unwrap()[0].mwe_spans.is_empty());
    }

    #[test]
    fn category_filter() {
        let text = sentence(&[("dal", "1:LVC.full"), ("odgovor", "1")]);
        assert!(parse_cupt(&text, Some(&["VID"])).unwrap()[0].mwe_spans.is_empty());
        assert_eq!(parse_cupt(&text, None).unwrap()[0].mwe_spans.len(), 1);
    }

    #[test]
    fn errors() {
        let dangling = sentence(&[("a", "1"), ("b", "1:VID")]);
        assert!(matches!(parse_cupt(&dangling, None), Err(Error::Parse { line: 2, .. })));
        let short = "1\ta\tb\n";
        assert!(matches!(parse_cupt(short, None), Err(Error::Parse { line: 1, .. })));
        let unordered = format!("{}\n{}\n", row(2, "a", "*"), row(1, "b", "*"));
        assert!(parse_cupt(&unordered, None).is_err());
    }

    #[test]
    fn ranges_and_empty_nodes_are_skipped() {
        let text = format!(
            "{}\n{}\n{}\n{}\n",
            row(1, "a", "1:VID"),
            "2-3\tdel\t_\t_\t_\t_\t_\t_\t_\t_\t_",
            row(2, "b", "1"),
            row(3, "c", "*")
        );
        let parsed = parse_cupt(&text, None).unwrap();
        assert_eq!(parsed[0].rows.len(), 3);
        assert_eq!(parsed[0].mwe_spans[0].tokens, BTreeSet::from([1, 2]));
    }

    #[test]
    fn conversion_rules() {
        let text = sentence(&[("vrgel", "1:VID"), ("puško", "1"), ("v", "*")]);
        let s = &parse_cupt(&text, None).unwrap()[0];
        let a = cupt_to_annotated(s, "sl");
        assert_eq!(
            a.token_labels,
            vec![TokenLabel::Idiomatic, TokenLabel::Idiomatic, TokenLabel::Outside]
        );
        assert!(a.is_idiomatic());
        assert_eq!(a.expression, "vrgel puško");
        assert_eq!(a.annotator_a, a.annotator_b);

        let none = &parse_cupt(&sentence(&[("a", "*"), ("b", "*")]), None).unwrap()[0];
        let a = cupt_to_annotated(none, "sl");
        assert!(a.token_labels.iter().all(|&l| l == TokenLabel::Outside));
        assert!(!a.is_idiomatic());
    }

    #[test]
    fn overlapping_spans_are_unioned() {
        let text = sentence(&[
            ("a", "1:VID"),
            ("b", "1;2:VID"),
            ("c", "2"),
            ("d", "*"),
        ]);
        let s = &parse_cupt(&text, None).unwrap()[0];
        let a = cupt_to_annotated(s, "hr");
        let idiomatic: Vec<bool> = a.token_labels.iter().map(|l| l.is_idiomatic()).collect();
        assert_eq!(idiomatic, [true, true, true, false]);
    }

    #[test]
    fn write_regenerates_column() {
        let text = sentence(&[("a", "1:VID;2:LVC.full"), ("b", "1"), ("c", "2")]);
        let parsed = parse_cupt(&text, Some(&["VID"])).unwrap();
        let mut buf = Vec::new();
        write_cupt(&parsed, &mut buf).unwrap();
        let out = String::from_utf8(buf).unwrap();
        let mwe: Vec<&str> = out
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .map(|l| l.rsplit('\t').next().unwrap())
            .collect();
        assert_eq!(mwe, ["1:VID", "1", "*"]);
    }
}
