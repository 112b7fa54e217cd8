//! Cross-group comparison: aggregates, paired Wilcoxon tests and quiz
//! accuracies, rendered as JSON (via serde) or a plain-text table.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{aggregate_group, latest_per_key, AggregateError, AnnotationRecord, Dimension, GroupAggregate, RatioMean};
use super::quiz::QuizResult;
use super::wilcoxon::{wilcoxon_signed_rank, Alternative, WilcoxonError, WilcoxonResult, DEFAULT_ALPHA};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WilcoxonSpec {
    /// Baseline group.
    pub a: String,
    /// Group hypothesised to differ from the baseline.
    pub b: String,
    pub metric: Dimension,
    pub alternative: Alternative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonComparison {
    pub spec: WilcoxonSpec,
    pub result: WilcoxonResult,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizSummary {
    pub label: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl QuizSummary {
    pub fn new(label: impl Into<String>, result: &QuizResult) -> Self {
        QuizSummary {
            label: label.into(),
            correct: result.correct,
            total: result.total,
            accuracy: result.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub groups: Vec<GroupAggregate>,
    pub wilcoxon: Vec<WilcoxonComparison>,
    pub quiz: Vec<QuizSummary>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("no shared query ids between {a:?} and {b:?}")]
    NoPairs { a: String, b: String },
    #[error("wilcoxon {a} vs {b}: {source}")]
    Wilcoxon { a: String, b: String, source: WilcoxonError },
}

/// Per-query mean of `metric` for one group (averaged over annotators).
fn per_query(records: &[&AnnotationRecord], metric: Dimension) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.response_ref.query_id.clone()).or_default();
        e.0 += u64::from(r.score(metric));
        e.1 += 1;
    }
    acc.into_iter().map(|(q, (s, n))| (q, s as f64 / n as f64)).collect()
}

/// `(query_id, a, b)` for every query scored in both groups, by query id.
pub fn paired_scores(records: &[AnnotationRecord], a: &str, b: &str, metric: Dimension) -> Vec<(String, f64, f64)> {
    let pick = |g: &str| -> Vec<&AnnotationRecord> { records.iter().filter(|r| r.response_ref.group == g).collect() };
    let sa = per_query(&pick(a), metric);
    let sb = per_query(&pick(b), metric);
    sa.into_iter()
        .filter_map(|(q, x)| sb.get(&q).map(|y| (q, x, *y)))
        .collect()
}

pub fn build_comparison(
    groups: &[&str],
    store: &[AnnotationRecord],
    quiz: &[QuizSummary],
    specs: &[WilcoxonSpec],
) -> Result<ComparisonReport, ReportError> {
    build_comparison_at(groups, store, quiz, specs, DEFAULT_ALPHA)
}

pub fn build_comparison_at(
    groups: &[&str],
    store: &[AnnotationRecord],
    quiz: &[QuizSummary],
    specs: &[WilcoxonSpec],
    alpha: f64,
) -> Result<ComparisonReport, ReportError> {
    let records = latest_per_key(store.iter().cloned());
    let known = |g: &str| records.iter().any(|r| r.response_ref.group == g);
    let mut aggregates = Vec::with_capacity(groups.len());
    for g in groups {
        if !known(g) {
            return Err(ReportError::UnknownGroup(g.to_string()));
        }
        let members: Vec<AnnotationRecord> = records.iter().filter(|r| r.response_ref.group == *g).cloned().collect();
        aggregates.push(aggregate_group(&members, g)?);
    }
    let mut wilcoxon = Vec::with_capacity(specs.len());
    for spec in specs {
        for g in [&spec.a, &spec.b] {
            if !known(g) {
                return Err(ReportError::UnknownGroup(g.clone()));
            }
        }
        let pairs: Vec<(f64, f64)> = paired_scores(&records, &spec.a, &spec.b, spec.metric)
            .into_iter()
            .map(|(_, x, y)| (x, y))
            .collect();
        if pairs.is_empty() {
            return Err(ReportError::NoPairs {
                a: spec.a.clone(),
                b: spec.b.clone(),
            });
        }
        let result = wilcoxon_signed_rank(&pairs, spec.alternative).map_err(|source| ReportError::Wilcoxon {
            a: spec.a.clone(),
            b: spec.b.clone(),
            source,
        })?;
        wilcoxon.push(WilcoxonComparison {
            significant: result.significant(alpha),
            spec: spec.clone(),
            result,
        });
    }
    Ok(ComparisonReport {
        alpha,
        groups: aggregates,
        wilcoxon,
        quiz: quiz.to_vec(),
    })
}

fn ratio_cell(m: &RatioMean) -> String {
    match m.mean {
        Some(v) => format!("{v:.2}"),
        None => "n/a".to_string(),
    }
}

impl ComparisonReport {
    pub fn group(&self, name: &str) -> Option<&GroupAggregate> {
        self.groups.iter().find(|g| g.group == name)
    }

    /// Fixed-width text table, one row per group, followed by test and quiz
    /// sections when present.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let width = self.groups.iter().map(|g| g.group.len()).max().unwrap_or(0).max(16);
        let _ = writeln!(
            out,
            "{:<width$} {:>4} {:>8} {:>9} {:>12} {:>7} {:>6} {:>9} {:>5}",
            "Comparison Group", "N", "Accuracy", "Relevance", "Completeness", "Clarity", "Recall", "Precision", "F1"
        );
        for g in &self.groups {
            let _ = writeln!(
                out,
                "{:<width$} {:>4} {:>8.2} {:>9.2} {:>12.2} {:>7.2} {:>6} {:>9} {:>5}",
                g.group,
                g.n,
                g.accuracy,
                g.relevance,
                g.completeness,
                g.clarity,
                ratio_cell(&g.recall),
                ratio_cell(&g.precision),
                ratio_cell(&g.f1),
            );
        }
        if !self.wilcoxon.is_empty() {
            let _ = writeln!(out, "\nWilcoxon signed-rank, one-tailed, alpha = {}", self.alpha);
            for w in &self.wilcoxon {
                let r = &w.result;
                let _ = writeln!(
                    out,
                    "{} vs {} ({}, {}): W = {}, n = {} ({} non-zero), p = {:.4}, {}",
                    w.spec.a,
                    w.spec.b,
                    w.spec.metric,
                    w.spec.alternative.as_str(),
                    r.w_statistic,
                    r.n_input,
                    r.n_effective,
                    r.p_value,
                    if w.significant { "significant" } else { "not significant" }
                );
            }
        }
        if !self.quiz.is_empty() {
            let _ = writeln!(out, "\nQuiz accuracy");
            for q in &self.quiz {
                let _ = writeln!(out, "{}: {}/{} = {:.0}%", q.label, q.correct, q.total, q.accuracy * 100.0);
            }
        }
        out
    }
}
