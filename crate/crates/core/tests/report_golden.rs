//! Report serialisation against committed golden files.

use std::fs;
use std::path::{Path, PathBuf};

use mice_core::eval::{emit_report, histogram, ConfusionCounts, EvalReport, ExpressionRow, ReportFormat, ResultRow};
use mice_core::model::Task;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read(name: &str) -> String {
    fs::read_to_string(fixture(name)).unwrap()
}

fn report() -> EvalReport {
    let mut r = EvalReport::new("in-training", "random train=6 test=3 dev=1", 7);
    r.metadata.insert("version".into(), "golden".into());
    let gru = ConfusionCounts { level: Task::Sentence, tp: 1, fp: 1, tn: 1, fn_: 0 };
    let svm = ConfusionCounts { level: Task::Token, tp: 5, fp: 2, tn: 40, fn_: 3 };
    r.results.push(ResultRow::new("in-training", "gru", 6, 3, gru));
    r.results.push(ResultRow::new(
        "in-training",
        "all-positive",
        6,
        3,
        ConfusionCounts::constant(true, 1, 2, Task::Sentence),
    ));
    r.results.push(ResultRow::new("in-training", "svm", 6, 3, svm));
    let expr = |name: &str, n, gold, detected, f1| ExpressionRow {
        expression: name.into(),
        test_sentences: n,
        units: n,
        gold_positive: gold,
        detected,
        f1,
    };
    r.expressions.push(expr("break the ice", 3, 2, 1, 2.0 / 3.0));
    r.expressions.push(expr("spill the beans", 4, 0, 0, 0.0));
    r.histogram = histogram(&[2.0 / 3.0, 0.0], 4);
    r
}

#[test]
fn tsv_matches_golden() {
    let r = report();
    assert_eq!(r.results_tsv(), read("golden_report.tsv"));
    assert_eq!(r.expressions_tsv(), read("golden_report.expressions.tsv"));
    assert_eq!(r.histogram_tsv(), read("golden_report.histogram.tsv"));
}

#[test]
fn json_matches_golden() {
    assert_eq!(report().to_json().unwrap(), read("golden_report.json"));
}

#[test]
fn golden_json_reemits_identical_files() {
    let parsed = EvalReport::read_json(&fixture("golden_report.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut written = emit_report(&parsed, ReportFormat::Tsv, dir.path(), "golden_report").unwrap();
    written.extend(emit_report(&parsed, ReportFormat::Json, dir.path(), "golden_report").unwrap());
    assert_eq!(written.len(), 4);
    for path in written {
        let name = path.file_name().unwrap().to_str().unwrap().to_owned();
        assert_eq!(fs::read_to_string(&path).unwrap(), read(&name), "{name}");
    }
}

#[test]
fn unknown_schema_version_is_rejected() {
    let text = read("golden_report.json").replace("\"schema_version\": 1", "\"schema_version\": 2");
    assert!(EvalReport::from_json(&text).is_err());
}
