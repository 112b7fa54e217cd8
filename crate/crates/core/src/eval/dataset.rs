//! Benchmark query records and the 26 x 10 conformance check.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lexicon::{GuidelineLexicon, GUIDELINE_COUNT};

pub const QUERIES_PER_GUIDELINE: usize = 10;
pub const CONFORMANT_TOTAL: usize = GUIDELINE_COUNT * QUERIES_PER_GUIDELINE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Audience {
    Provider,
    AdultPatient,
    PediatricPatient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub query_id: String,
    pub guideline_key: String,
    pub audience: Audience,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetViolation {
    WrongCount { guideline_key: String, count: usize },
    UnknownGuideline { query_id: String, guideline_key: String },
    DuplicateQueryId { query_id: String },
    EmptyText { query_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetReport {
    /// Count per lexicon guideline key (zero when absent).
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
    pub conformant: bool,
    pub violations: Vec<DatasetViolation>,
}

impl DatasetReport {
    /// Sorted, distinct guideline keys whose query count is off or that
    /// are not in the lexicon.
    pub fn violating_guidelines(&self) -> Vec<&str> {
        let keys: BTreeSet<&str> = self
            .violations
            .iter()
            .filter_map(|v| match v {
                DatasetViolation::WrongCount { guideline_key, .. }
                | DatasetViolation::UnknownGuideline { guideline_key, .. } => Some(guideline_key.as_str()),
                _ => None,
            })
            .collect();
        keys.into_iter().collect()
    }
}

/// Conformant iff every one of the 26 guidelines has exactly 10 queries,
/// query ids are unique and every record names a lexicon guideline.
pub fn validate_dataset(records: &[QueryRecord], lexicon: &GuidelineLexicon) -> DatasetReport {
    let mut counts: BTreeMap<String, usize> = lexicon.keys().map(|k| (k.into(), 0)).collect();
    let mut violations = Vec::new();
    let mut ids = BTreeSet::new();
    for r in records {
        if !ids.insert(r.query_id.as_str()) {
            violations.push(DatasetViolation::DuplicateQueryId {
                query_id: r.query_id.clone(),
            });
        }
        if r.text.trim().is_empty() {
            violations.push(DatasetViolation::EmptyText {
                query_id: r.query_id.clone(),
            });
        }
        match counts.get_mut(&r.guideline_key) {
            Some(c) => *c += 1,
            None => violations.push(DatasetViolation::UnknownGuideline {
                query_id: r.query_id.clone(),
                guideline_key: r.guideline_key.clone(),
            }),
        }
    }
    for (key, count) in &counts {
        if *count != QUERIES_PER_GUIDELINE {
            violations.push(DatasetViolation::WrongCount {
                guideline_key: key.clone(),
                count: *count,
            });
        }
    }
    DatasetReport {
        conformant: violations.is_empty() && records.len() == CONFORMANT_TOTAL,
        total: records.len(),
        counts,
        violations,
    }
}
