//! Multiple-choice quiz scoring.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const CHOICES_PER_ITEM: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuizItem {
    pub item_id: String,
    pub stem: String,
    pub choices: Vec<String>,
    /// Zero-based indices of every keyed-correct choice.
    pub correct: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuizError {
    #[error("answer for unknown quiz item {0:?}")]
    UnknownItem(String),
    #[error("quiz item {0:?} answered more than once")]
    DuplicateAnswer(String),
    #[error("quiz item {0:?} appears more than once in the key")]
    DuplicateItem(String),
    #[error("quiz item {item_id:?} is malformed: {reason}")]
    InvalidItem { item_id: String, reason: &'static str },
    #[error("choice {choice} for quiz item {item_id:?} is out of range")]
    ChoiceOutOfRange { item_id: String, choice: usize },
}

impl QuizItem {
    pub fn validate(&self) -> Result<(), QuizError> {
        let invalid = |reason| QuizError::InvalidItem {
            item_id: self.item_id.clone(),
            reason,
        };
        if self.item_id.trim().is_empty() {
            return Err(invalid("empty item id"));
        }
        if self.choices.len() != CHOICES_PER_ITEM {
            return Err(invalid("expected exactly five choices"));
        }
        if self.correct.is_empty() {
            return Err(invalid("no correct choice keyed"));
        }
        let set: BTreeSet<_> = self.correct.iter().collect();
        if set.len() != self.correct.len() {
            return Err(invalid("duplicate correct index"));
        }
        if self.correct.iter().any(|c| *c >= CHOICES_PER_ITEM) {
            return Err(invalid("correct index out of range"));
        }
        Ok(())
    }

    pub fn is_correct(&self, choice: usize) -> bool {
        self.correct.contains(&choice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: String,
    pub selected: Option<usize>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizResult {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub items: Vec<ItemOutcome>,
}

/// Scores one answer per item against the key. Unanswered items count as
/// incorrect; the denominator is always the key size.
pub fn score_quiz(answers: &[(String, usize)], key: &[QuizItem]) -> Result<QuizResult, QuizError> {
    let mut by_id: BTreeMap<&str, &QuizItem> = BTreeMap::new();
    for item in key {
        item.validate()?;
        if by_id.insert(item.item_id.as_str(), item).is_some() {
            return Err(QuizError::DuplicateItem(item.item_id.clone()));
        }
    }
    let mut selected: BTreeMap<&str, usize> = BTreeMap::new();
    for (id, choice) in answers {
        if !by_id.contains_key(id.as_str()) {
            return Err(QuizError::UnknownItem(id.clone()));
        }
        if *choice >= CHOICES_PER_ITEM {
            return Err(QuizError::ChoiceOutOfRange {
                item_id: id.clone(),
                choice: *choice,
            });
        }
        if selected.insert(id.as_str(), *choice).is_some() {
            return Err(QuizError::DuplicateAnswer(id.clone()));
        }
    }
    let items: Vec<ItemOutcome> = key
        .iter()
        .map(|item| {
            let pick = selected.get(item.item_id.as_str()).copied();
            ItemOutcome {
                item_id: item.item_id.to_string(),
                selected: pick,
                correct: pick.is_some_and(|c| item.is_correct(c)),
            }
        })
        .collect();
    let correct = items.iter().filter(|o| o.correct).count();
    let total = key.len();
    Ok(QuizResult {
        correct,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn item(id: &str, correct: Vec<usize>) -> QuizItem {
        QuizItem {
            item_id: id.into(),
            stem: "?".into(),
            choices: (0..5).map(|i| format!("c{i}")).collect(),
            correct,
        }
    }

    fn key20() -> Vec<QuizItem> {
        (0..20).map(|i| item(&format!("i{i}"), vec![i % 5])).collect()
    }

    #[test]
    fn eighteen_of_twenty() {
        let key = key20();
        let answers: Vec<_> = key
            .iter()
            .enumerate()
            .map(|(i, it)| (it.item_id.clone(), if i < 18 { it.correct[0] } else { (it.correct[0] + 1) % 5 }))
            .collect();
        let r = score_quiz(&answers, &key).unwrap();
        assert_eq!((r.correct, r.total), (18, 20));
        assert_eq!(r.accuracy, 0.9);
    }

    #[test]
    fn unanswered_counts_wrong() {
        let key = key20();
        let answers = vec![("i0".to_string(), 0)];
        let r = score_quiz(&answers, &key).unwrap();
        assert_eq!((r.correct, r.total), (1, 20));
        assert_eq!(r.items[1].selected, None);
    }

    #[test]
    fn multi_correct_either_accepted() {
        let key = vec![item("m", vec![1, 2])];
        assert_eq!(score_quiz(&[("m".into(), 2)], &key).unwrap().correct, 1);
        assert_eq!(score_quiz(&[("m".into(), 1)], &key).unwrap().correct, 1);
        assert_eq!(score_quiz(&[("m".into(), 0)], &key).unwrap().correct, 0);
    }

    #[test]
    fn errors() {
        let key = key20();
        assert_eq!(
            score_quiz(&[("nope".into(), 0)], &key),
            Err(QuizError::UnknownItem("nope".into()))
        );
        assert_eq!(
            score_quiz(&[("i0".into(), 0), ("i0".into(), 1)], &key),
            Err(QuizError::DuplicateAnswer("i0".into()))
        );
        assert!(matches!(
            score_quiz(&[("i0".into(), 5)], &key),
            Err(QuizError::ChoiceOutOfRange { .. })
        ));
        let mut bad = key20();
        bad[3].choices.pop();
        assert!(matches!(score_quiz(&[], &bad), Err(QuizError::InvalidItem { .. })));
    }
}
