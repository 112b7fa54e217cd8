//! Generation backends for the two prompt layers.
//!
//! A [`GenerationRequest`] carries both the rendered prompts (what a remote
//! model sees) and the structured task they were rendered from (what the
//! offline reference backend works on). Temperature is always zero.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::digest::FieldHasher;
use crate::lexicon::GuidelineLexicon;
use crate::targets::extract_targets;
use crate::text::{content_words, sentences};

pub const TEMPERATURE: f64 = 0.0;
pub const SUMMARY_SENTENCES: usize = 3;

/// One layer-1 output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub chunk_id: String,
    /// Label bound to `{source}` in the layer-1 prompt (the parent doc id).
    pub source: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task<'a> {
    Summarize {
        query: &'a str,
        source: &'a str,
        content: &'a str,
    },
    Synthesize {
        query: &'a str,
        summaries: &'a [Summary],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest<'a> {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub task: Task<'a>,
}

impl GenerationRequest<'_> {
    /// Content fingerprint of what a remote model would receive.
    pub fn fingerprint(&self, model: &str) -> String {
        let mut h = FieldHasher::new();
        h.str(model).f64(self.temperature).str(&self.system).str(&self.user);
        h.finish_hex()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("generation backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no recorded response for request {0}")]
    MissingRecording(String),
    #[error("invalid backend response: {0}")]
    InvalidResponse(String),
}

pub trait GenerationBackend {
    fn tag(&self) -> String;

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, GenerationError>;
}

/// Deterministic extractive backend used for offline runs and tests.
#[derive(Debug, Clone)]
pub struct OfflineGenerator {
    lexicon: GuidelineLexicon,
}

impl OfflineGenerator {
    pub const TAG: &'static str = "offline-extractive-v1";

    pub fn new(lexicon: GuidelineLexicon) -> Self {
        OfflineGenerator { lexicon }
    }

    /// Picks up to three sentences sharing the most distinct content words
    /// with the query (ties by position) and returns them in document order.
    /// Sentences with no overlap are skipped; if none overlap, the first
    /// sentence is used.
    pub fn summarize(&self, query: &str, source: &str, content: &str) -> String {
        let query_words: Vec<String> = dedup(content_words(query));
        let sents = sentences(content);
        let mut scored: Vec<(usize, usize)> = sents
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let words = content_words(s);
                let shared = query_words.iter().filter(|w| words.contains(w)).count();
                (i, shared)
            })
            .filter(|(_, shared)| *shared > 0)
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut picked: Vec<usize> = scored.iter().take(SUMMARY_SENTENCES).map(|(i, _)| *i).collect();
        if picked.is_empty() && !sents.is_empty() {
            picked.push(0);
        }
        picked.sort_unstable();
        let body: Vec<&str> = picked.iter().map(|i| sents[*i].as_str()).collect();
        format!("Source: {source}. {}", body.join(" "))
    }

    /// Numbered list with one line per summary (source and first sentence),
    /// then a `Summary:` line naming the lexicon drugs and genes in the query.
    pub fn synthesize(&self, query: &str, summaries: &[Summary]) -> String {
        let mut lines = Vec::with_capacity(summaries.len() + 1);
        for (i, s) in summaries.iter().enumerate() {
            let prefix = format!("Source: {}. ", s.source);
            let body = s.text.strip_prefix(&prefix).unwrap_or(&s.text);
            let first = sentences(body).into_iter().next().unwrap_or_default();
            lines.push(format!("{}. {}: {}", i + 1, s.source, first));
        }
        let targets = extract_targets(query, &self.lexicon);
        if targets.is_empty() {
            lines.push("Summary: no guideline drugs or genes matched the query.".to_string());
        } else {
            lines.push(format!(
                "Summary: drugs: {}; genes: {}.",
                list_or_none(&targets.drugs),
                list_or_none(&targets.genes)
            ));
        }
        lines.join("\n")
    }
}

fn dedup(mut words: Vec<String>) -> Vec<String> {
    words.sort();
    words.dedup();
    words
}

fn list_or_none(items: &[String]) -> String {
    if items.is_empty() {
        "none".to_string()
    } else {
        items.join(", ")
    }
}

impl GenerationBackend for OfflineGenerator {
    fn tag(&self) -> String {
        Self::TAG.to_string()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, GenerationError> {
        Ok(match request.task {
            Task::Summarize { query, source, content } => self.summarize(query, source, content),
            Task::Synthesize { query, summaries } => self.synthesize(query, summaries),
        })
    }
}
