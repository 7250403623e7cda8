//! Metrics, experiment protocols and reports.

mod metrics;
mod protocols;
mod report;
mod systems;

pub use metrics::{all_positive_f1, score, ConfusionCounts};
pub use protocols::{
    describe_split, run_balanced_study, run_crosslingual_eval, run_in_training_eval, run_on_split,
    run_out_of_training_eval, run_per_expression_eval, run_size_ablation, CrossLingualTest, ABLATION_FRACTIONS,
    BALANCED_RATIOS, DISJOINT_TEST_FRACTION, HISTOGRAM_BINS, IN_TRAINING_RATIOS,
};
pub use report::{
    emit_report, histogram, EvalReport, ExpressionRow, HistogramBin, ReportFormat, ResultRow, EXPRESSION_COLUMNS,
    REPORT_SCHEMA_VERSION, RESULT_COLUMNS,
};
pub use systems::{
    decide, fit_mixture_from_scores, fit_system, gold_units, mixture_scores, vote_scores, FittedSystem, SystemSpec,
};
