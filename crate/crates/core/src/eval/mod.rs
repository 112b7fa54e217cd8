//! Benchmark methodology: dataset conformance, rubric aggregation,
//! recall/precision/F1, the one-tailed Wilcoxon signed-rank test, quiz
//! scoring and the comparison report that ties them together.

pub mod dataset;
pub mod metrics;
pub mod quiz;
pub mod report;
pub mod wilcoxon;

pub use dataset::{validate_dataset, Audience, DatasetReport, QueryRecord};
pub use metrics::{
    aggregate_group, compute_f1, compute_precision, f1_from_counts, compute_recall, AnnotationRecord, Dimension,
    GroupAggregate, ResponseRef,
};
pub use quiz::{score_quiz, QuizItem, QuizResult};
pub use report::{build_comparison, ComparisonReport, WilcoxonSpec};
pub use wilcoxon::{wilcoxon_signed_rank, Alternative, WilcoxonResult};
