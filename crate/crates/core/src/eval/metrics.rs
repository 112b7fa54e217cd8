//! Annotation records, recall/precision/F1 and per-group aggregation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("{0} is undefined for these counts")]
    UndefinedMetric(&'static str),
}

/// `tp / (tp + fn)`.
pub fn compute_recall(tp: u64, false_neg: u64) -> Result<f64, MetricError> {
    ratio(tp, tp + false_neg, "recall")
}

/// `tp / (tp + fp)`.
pub fn compute_precision(tp: u64, false_pos: u64) -> Result<f64, MetricError> {
    ratio(tp, tp + false_pos, "precision")
}

fn ratio(num: u64, den: u64, name: &'static str) -> Result<f64, MetricError> {
    if den == 0 {
        return Err(MetricError::UndefinedMetric(name));
    }
    Ok(num as f64 / den as f64)
}

/// Harmonic mean of precision and recall.
///
/// Rounding in `2pr / (p + r)` can land one ulp outside `[min(p, r), max(p, r)]`;
/// the result is clamped back into that interval, which always holds the
/// exact value.
pub fn compute_f1(precision: f64, recall: f64) -> Result<f64, MetricError> {
    let sum = precision + recall;
    if sum <= 0.0 {
        return Err(MetricError::UndefinedMetric("f1"));
    }
    let f1 = 2.0 * (precision * recall) / sum;
    Ok(f1.clamp(precision.min(recall), precision.max(recall)))
}

/// F1 straight from counts, `2tp / (2tp + fp + fn)`: one correctly rounded
/// division. Undefined exactly when [`compute_f1`] of the count-derived
/// precision and recall is.
pub fn f1_from_counts(tp: u64, false_pos: u64, false_neg: u64) -> Result<f64, MetricError> {
    if tp + false_pos == 0 || tp + false_neg == 0 || tp == 0 {
        return Err(MetricError::UndefinedMetric("f1"));
    }
    ratio(2 * tp, 2 * tp + false_pos + false_neg, "f1")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResponseRef {
    pub query_id: String,
    pub group: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Accuracy,
    Relevance,
    Completeness,
    Clarity,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Accuracy,
        Dimension::Relevance,
        Dimension::Completeness,
        Dimension::Clarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Accuracy => "accuracy",
            Dimension::Relevance => "relevance",
            Dimension::Completeness => "completeness",
            Dimension::Clarity => "clarity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One human judgment of one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub response_ref: ResponseRef,
    pub accuracy: u8,
    pub relevance: u8,
    pub completeness: u8,
    pub clarity: u8,
    #[serde(rename = "tp", default, skip_serializing_if = "Option::is_none")]
    pub true_pos: Option<u32>,
    #[serde(rename = "fp", default, skip_serializing_if = "Option::is_none")]
    pub false_pos: Option<u32>,
    #[serde(rename = "fn", default, skip_serializing_if = "Option::is_none")]
    pub false_neg: Option<u32>,
    pub annotator_id: String,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submission_token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("{dimension} score {value} is outside 1..=5")]
    LikertOutOfRange { dimension: Dimension, value: u8 },
    #[error("{0} must not be empty")]
    EmptyField(&'static str),
}

impl AnnotationRecord {
    pub fn score(&self, dimension: Dimension) -> u8 {
        match dimension {
            Dimension::Accuracy => self.accuracy,
            Dimension::Relevance => self.relevance,
            Dimension::Completeness => self.completeness,
            Dimension::Clarity => self.clarity,
        }
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        for d in Dimension::ALL {
            let value = self.score(d);
            if !(LIKERT_MIN..=LIKERT_MAX).contains(&value) {
                return Err(AnnotationError::LikertOutOfRange { dimension: d, value });
            }
        }
        if self.response_ref.query_id.trim().is_empty() {
            return Err(AnnotationError::EmptyField("query_id"));
        }
        if self.response_ref.group.trim().is_empty() {
            return Err(AnnotationError::EmptyField("group"));
        }
        if self.annotator_id.trim().is_empty() {
            return Err(AnnotationError::EmptyField("annotator_id"));
        }
        Ok(())
    }

    /// `None` when counts are missing or `tp + fn == 0`.
    pub fn recall(&self) -> Option<f64> {
        compute_recall(self.true_pos?.into(), self.false_neg?.into()).ok()
    }

    /// `None` when counts are missing or `tp + fp == 0`.
    pub fn precision(&self) -> Option<f64> {
        compute_precision(self.true_pos?.into(), self.false_pos?.into()).ok()
    }

    pub fn f1(&self) -> Option<f64> {
        f1_from_counts(self.true_pos?.into(), self.false_pos?.into(), self.false_neg?.into()).ok()
    }
}

/// Keeps the last record per `(response_ref, annotator_id)`, in order of
/// first appearance of each key.
pub fn latest_per_key(records: impl IntoIterator<Item = AnnotationRecord>) -> Vec<AnnotationRecord> {
    let mut order: Vec<(ResponseRef, String)> = Vec::new();
    let mut latest: BTreeMap<(ResponseRef, String), AnnotationRecord> = BTreeMap::new();
    for r in records {
        let key = (r.response_ref.clone(), r.annotator_id.clone());
        if latest.insert(key.clone(), r).is_none() {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|k| latest.remove(&k).expect("key recorded on insert"))
        .collect()
}

/// Mean of a ratio metric over the records where it is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioMean {
    pub mean: Option<f64>,
    pub included: usize,
    pub excluded: usize,
}

impl RatioMean {
    fn from_values(mut values: Vec<f64>, total: usize) -> Self {
        // summing in sorted order keeps the mean independent of record order
        values.sort_by(f64::total_cmp);
        let included = values.len();
        let mean = (included > 0).then(|| values.iter().sum::<f64>() / included as f64);
        RatioMean {
            mean,
            included,
            excluded: total - included,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregate {
    pub group: String,
    pub n: usize,
    pub accuracy: f64,
    pub relevance: f64,
    pub completeness: f64,
    pub clarity: f64,
    pub recall: RatioMean,
    pub precision: RatioMean,
    pub f1: RatioMean,
}

impl GroupAggregate {
    pub fn likert(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Accuracy => self.accuracy,
            Dimension::Relevance => self.relevance,
            Dimension::Completeness => self.completeness,
            Dimension::Clarity => self.clarity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("group {0:?} has no annotations")]
    EmptyGroup(String),
    #[error("annotation for {found:?} passed while aggregating {expected:?}")]
    GroupMismatch { expected: String, found: String },
}

/// Arithmetic means over one group's annotations.
pub fn aggregate_group(annotations: &[AnnotationRecord], group: &str) -> Result<GroupAggregate, AggregateError> {
    if annotations.is_empty() {
        return Err(AggregateError::EmptyGroup(group.to_string()));
    }
    if let Some(r) = annotations.iter().find(|r| r.response_ref.group != group) {
        return Err(AggregateError::GroupMismatch {
            expected: group.to_string(),
            found: r.response_ref.group.clone(),
        });
    }
    let n = annotations.len();
    let likert_mean = |d: Dimension| {
        let sum: u64 = annotations.iter().map(|r| u64::from(r.score(d))).sum();
        sum as f64 / n as f64
    };
    let ratio = |f: fn(&AnnotationRecord) -> Option<f64>| {
        RatioMean::from_values(annotations.iter().filter_map(f).collect(), n)
    };
    Ok(GroupAggregate {
        group: group.to_string(),
        n,
        accuracy: likert_mean(Dimension::Accuracy),
        relevance: likert_mean(Dimension::Relevance),
        completeness: likert_mean(Dimension::Completeness),
        clarity: likert_mean(Dimension::Clarity),
        recall: ratio(AnnotationRecord::recall),
        precision: ratio(AnnotationRecord::precision),
        f1: ratio(AnnotationRecord::f1),
    })
}

#[cfg(test)]
pub(crate) fn record(query_id: &str, group: &str, scores: [u8; 4], tp: Option<u32>, fp: Option<u32>, fn_: Option<u32>) -> AnnotationRecord {
    AnnotationRecord {
        response_ref: ResponseRef {
            query_id: query_id.into(),
            group: group.into(),
        },
        accuracy: scores[0],
        relevance: scores[1],
        completeness: scores[2],
        clarity: scores[3],
        true_pos: tp,
        false_pos: fp,
        false_neg: fn_,
        annotator_id: "r1".into(),
        timestamp: "2025-01-01T00:00:00Z".into(),
        submission_token: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn recall_examples() {
        assert_eq!(compute_recall(5, 0), Ok(1.0));
        assert_eq!(compute_recall(0, 3), Ok(0.0));
        assert_eq!(compute_recall(3, 1), Ok(0.75));
        assert_eq!(compute_recall(0, 0), Err(MetricError::UndefinedMetric("recall")));
    }

    #[test]
    fn precision_examples() {
        assert_eq!(compute_precision(4, 0), Ok(1.0));
        assert_eq!(compute_precision(0, 2), Ok(0.0));
        assert_eq!(compute_precision(9, 1), Ok(0.9));
        assert_eq!(compute_precision(0, 0), Err(MetricError::UndefinedMetric("precision")));
    }

    #[test]
    fn f1_examples() {
        assert!((compute_f1(0.8, 0.8).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(compute_f1(1.0, 0.0), Ok(0.0));
        assert!((compute_f1(0.5, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(compute_f1(0.0, 0.0), Err(MetricError::UndefinedMetric("f1")));
    }

    #[test]
    fn f1_counts_agree_with_ratio_path() {
        for tp in 0..30u64 {
            for fp in 0..30 {
                for fn_ in 0..30 {
                    let via = compute_precision(tp, fp).and_then(|p| compute_f1(p, compute_recall(tp, fn_)?));
                    match (via, f1_from_counts(tp, fp, fn_)) {
                        (Ok(a), Ok(b)) => assert!((a - b).abs() <= 4.0 * f64::EPSILON * b),
                        (Err(_), Err(_)) => {}
                        other => panic!("{tp} {fp} {fn_}: {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn all_fives() {
        let recs: Vec<_> = (0..7)
            .map(|i| record(&format!("q{i}"), "g", [5; 4], Some(3), None, Some(0)))
            .collect();
        let agg = aggregate_group(&recs, "g").unwrap();
        for d in Dimension::ALL {
            assert_eq!(agg.likert(d), 5.0);
        }
        assert_eq!(agg.recall.mean, Some(1.0));
        assert_eq!(agg.precision.mean, None);
        assert_eq!(agg.precision.excluded, 7);
    }

    #[test]
    fn undefined_ratios_excluded_not_zeroed() {
        let recs = vec![
            record("a", "g", [5; 4], Some(1), Some(0), Some(1)),
            record("b", "g", [5; 4], Some(0), Some(0), Some(0)),
            record("c", "g", [5; 4], None, None, None),
        ];
        let agg = aggregate_group(&recs, "g").unwrap();
        assert_eq!(agg.recall, RatioMean { mean: Some(0.5), included: 1, excluded: 2 });
        assert_eq!(agg.precision, RatioMean { mean: Some(1.0), included: 1, excluded: 2 });
        assert_eq!(agg.f1.included, 1);
        assert!((agg.f1.mean.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_and_mismatched_groups() {
        assert_eq!(
            aggregate_group(&[], "phase2"),
            Err(AggregateError::EmptyGroup("phase2".into()))
        );
        let recs = vec![record("a", "phase1", [5; 4], None, None, None)];
        assert!(matches!(
            aggregate_group(&recs, "phase2"),
            Err(AggregateError::GroupMismatch { .. })
        ));
    }

    #[test]
    fn likert_range_validated() {
        let mut r = record("a", "g", [5; 4], None, None, None);
        r.validate().unwrap();
        r.accuracy = 6;
        assert_eq!(
            r.validate(),
            Err(AnnotationError::LikertOutOfRange { dimension: Dimension::Accuracy, value: 6 })
        );
        r.accuracy = 0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn last_record_per_key_wins() {
        let first = record("a", "g", [3; 4], None, None, None);
        let other = record("b", "g", [4; 4], None, None, None);
        let second = record("a", "g", [5; 4], None, None, None);
        let mut other_annotator = record("a", "g", [1; 4], None, None, None);
        other_annotator.annotator_id = "r2".into();
        let out = latest_per_key([first, other.clone(), second.clone(), other_annotator.clone()]);
        assert_eq!(out, [second, other, other_annotator]);
    }

    #[test]
    fn serde_field_names() {
        let r = record("a", "g", [5; 4], Some(3), None, Some(1));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"tp\":3"));
        assert!(json.contains("\"fn\":1"));
        assert!(!json.contains("\"fp\""));
        let back: AnnotationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
