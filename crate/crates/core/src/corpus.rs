//! Guideline documents and greedy paragraph-packing chunker.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::whitespace_tokens;

pub const DEFAULT_MAX_CHUNK_TOKENS: usize = 512;
pub const MIN_CHUNK_BUDGET: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "CPIC")]
    Cpic,
    #[serde(rename = "PharmGKB")]
    PharmGkb,
    Other,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Cpic => "CPIC",
            Source::PharmGkb => "PharmGKB",
            Source::Other => "Other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CPIC" => Some(Source::Cpic),
            "PharmGKB" => Some(Source::PharmGkb),
            "Other" => Some(Source::Other),
            _ => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One guideline-style document as stored in a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: String,
    pub source: Source,
    pub guideline_key: String,
    pub title: String,
    pub body: String,
    #[serde(default)]
    pub drugs: Vec<String>,
    #[serde(default)]
    pub genes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("doc_id is empty")]
    EmptyId,
    #[error("duplicate entry {0:?} in {1}")]
    DuplicateEntry(String, &'static str),
    #[error("drug name {0:?} is not lowercase")]
    DrugCase(String),
    #[error("gene symbol {0:?} is not uppercase")]
    GeneCase(String),
}

impl Document {
    pub fn validate(&self) -> Result<(), DocumentError> {
        if self.doc_id.trim().is_empty() {
            return Err(DocumentError::EmptyId);
        }
        check_unique(&self.drugs, "drugs")?;
        check_unique(&self.genes, "genes")?;
        if let Some(d) = self.drugs.iter().find(|d| d.to_lowercase() != **d) {
            return Err(DocumentError::DrugCase(d.clone()));
        }
        if let Some(g) = self.genes.iter().find(|g| g.to_uppercase() != **g) {
            return Err(DocumentError::GeneCase(g.clone()));
        }
        Ok(())
    }
}

fn check_unique(items: &[String], field: &'static str) -> Result<(), DocumentError> {
    let mut seen = BTreeSet::new();
    for item in items {
        if !seen.insert(item.as_str()) {
            return Err(DocumentError::DuplicateEntry(item.clone(), field));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("invalid document {doc_id:?}: {source}")]
    InvalidDocument { doc_id: String, source: DocumentError },
}

/// An immutable, validated set of documents restricted to the expected sources.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    excluded: usize,
}

impl Corpus {
    /// Validates every record, rejects duplicate ids (including among
    /// excluded records) and drops documents whose source is not expected.
    pub fn assemble(
        records: impl IntoIterator<Item = Document>,
        expected_sources: &BTreeSet<Source>,
    ) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        let mut documents = Vec::new();
        let mut excluded = 0;
        for doc in records {
            doc.validate().map_err(|source| CorpusError::InvalidDocument {
                doc_id: doc.doc_id.clone(),
                source,
            })?;
            if !seen.insert(doc.doc_id.clone()) {
                return Err(CorpusError::DuplicateDocId(doc.doc_id));
            }
            if expected_sources.contains(&doc.source) {
                documents.push(doc);
            } else {
                excluded += 1;
            }
        }
        Ok(Corpus { documents, excluded })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Number of valid records dropped because of their source.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn sources(&self) -> BTreeSet<Source> {
        self.documents.iter().map(|d| d.source).collect()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Chunks every document, in corpus order.
    pub fn chunk_all(&self, max_chunk_tokens: usize) -> Result<Vec<Chunk>, ChunkError> {
        let mut out = Vec::new();
        for doc in &self.documents {
            out.extend(chunk_document(doc, max_chunk_tokens)?.chunks);
        }
        Ok(out)
    }

    pub fn source_by_doc(&self) -> BTreeMap<&str, Source> {
        self.documents
            .iter()
            .map(|d| (d.doc_id.as_str(), d.source))
            .collect()
    }
}

/// One retrievable unit of document text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub ordinal: usize,
    pub text: String,
    pub token_estimate: usize,
}

impl Chunk {
    pub fn new(doc_id: &str, ordinal: usize, text: String) -> Self {
        Chunk {
            chunk_id: chunk_id(doc_id, ordinal),
            doc_id: doc_id.to_string(),
            ordinal,
            token_estimate: whitespace_tokens(&text),
            text,
        }
    }
}

pub fn chunk_id(doc_id: &str, ordinal: usize) -> String {
    format!("{doc_id}#{ordinal}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkingReport {
    pub chunks: Vec<Chunk>,
    /// Ordinals of chunks holding a single paragraph larger than the budget.
    pub oversized: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChunkError {
    #[error("document {0:?} has an empty body")]
    EmptyDocument(String),
    #[error("chunk budget {0} is below the minimum of {MIN_CHUNK_BUDGET}")]
    BudgetTooSmall(usize),
}

/// Paragraphs of `body`: runs of lines separated by whitespace-only lines,
/// trimmed, empties dropped.
pub fn paragraphs(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in body.lines() {
        if line.trim().is_empty() {
            flush_paragraph(&mut out, &mut current);
        } else {
            current.push(line);
        }
    }
    flush_paragraph(&mut out, &mut current);
    out
}

fn flush_paragraph(out: &mut Vec<String>, lines: &mut Vec<&str>) {
    if !lines.is_empty() {
        let joined = lines.join("\n");
        let trimmed = joined.trim();
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
        lines.clear();
    }
}

/// The body with every paragraph break collapsed to a single newline. Joining
/// a document's chunk texts with `"\n"` reproduces this string.
pub fn normalize_body(body: &str) -> String {
    paragraphs(body).join("\n")
}

/// Greedy paragraph packing: paragraphs accumulate into the current chunk
/// until the next one would push it past `max_chunk_tokens`. A paragraph that
/// alone exceeds the budget becomes its own chunk and is reported as oversized.
pub fn chunk_document(doc: &Document, max_chunk_tokens: usize) -> Result<ChunkingReport, ChunkError> {
    if max_chunk_tokens < MIN_CHUNK_BUDGET {
        return Err(ChunkError::BudgetTooSmall(max_chunk_tokens));
    }
    let paras = paragraphs(&doc.body);
    if paras.is_empty() {
        return Err(ChunkError::EmptyDocument(doc.doc_id.clone()));
    }

    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut current_tokens = 0;
    for para in paras {
        let tokens = whitespace_tokens(&para);
        if !current.is_empty() && current_tokens + tokens > max_chunk_tokens {
            groups.push(core::mem::take(&mut current));
            current_tokens = 0;
        }
        current.push(para);
        current_tokens += tokens;
    }
    groups.push(current);

    let mut chunks = Vec::with_capacity(groups.len());
    let mut oversized = Vec::new();
    for (ordinal, group) in groups.into_iter().enumerate() {
        let chunk = Chunk::new(&doc.doc_id, ordinal, group.join("\n"));
        if chunk.token_estimate > max_chunk_tokens {
            oversized.push(ordinal);
        }
        chunks.push(chunk);
    }
    Ok(ChunkingReport { chunks, oversized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn doc(body: &str) -> Document {
        Document {
            doc_id: "d".into(),
            source: Source::Cpic,
            guideline_key: "k".into(),
            title: "t".into(),
            body: body.into(),
            drugs: vec![],
            genes: vec![],
        }
    }

    fn words(n: usize, tag: &str) -> String {
        (0..n).map(|i| format!("{tag}{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn single_short_paragraph_is_one_chunk() {
        let report = chunk_document(&doc(&words(10, "w")), 512).unwrap();
        assert_eq!(report.chunks.len(), 1);
        assert_eq!(report.chunks[0].ordinal, 0);
        assert_eq!(report.chunks[0].chunk_id, "d#0");
        assert_eq!(report.chunks[0].token_estimate, 10);
        assert!(report.oversized.is_empty());
    }

    #[test]
    fn three_300_token_paragraphs_do_not_pair() {
        // 300 + 300 > 512, so each paragraph closes the previous chunk.
        let body = [words(300, "a"), words(300, "b"), words(300, "c")].join("\n\n");
        let report = chunk_document(&doc(&body), 512).unwrap();
        let sizes: Vec<_> = report.chunks.iter().map(|c| c.token_estimate).collect();
        assert_eq!(sizes, [300, 300, 300]);
        assert_eq!(
            report.chunks.iter().map(|c| c.ordinal).collect::<Vec<_>>(),
            [0, 1, 2]
        );
    }

    #[test]
    fn small_paragraphs_pack_together() {
        let body = [words(200, "a"), words(200, "b"), words(200, "c")].join("\n\n");
        let report = chunk_document(&doc(&body), 512).unwrap();
        let sizes: Vec<_> = report.chunks.iter().map(|c| c.token_estimate).collect();
        assert_eq!(sizes, [400, 200]);
    }

    #[test]
    fn oversized_paragraph_is_flagged() {
        let body = [words(20, "a"), words(40, "b"), words(5, "c")].join("\n\n");
        let report = chunk_document(&doc(&body), 32).unwrap();
        let sizes: Vec<_> = report.chunks.iter().map(|c| c.token_estimate).collect();
        assert_eq!(sizes, [20, 40, 5]);
        assert_eq!(report.oversized, [1]);
    }

    #[test]
    fn empty_and_blank_bodies_rejected() {
        assert_eq!(
            chunk_document(&doc(""), 512),
            Err(ChunkError::EmptyDocument("d".into()))
        );
        assert!(matches!(
            chunk_document(&doc(" \n\t\n  "), 512),
            Err(ChunkError::EmptyDocument(_))
        ));
    }

    #[test]
    fn budget_below_minimum_rejected() {
        assert_eq!(
            chunk_document(&doc("x"), 31),
            Err(ChunkError::BudgetTooSmall(31))
        );
    }

    #[test]
    fn paragraph_breaks_normalize_to_single_newline() {
        let body = "  first line\nstill first  \n\n \n\nsecond\n\n";
        assert_eq!(normalize_body(body), "first line\nstill first\nsecond");
    }

    #[test]
    fn duplicate_ids_rejected_even_when_excluded() {
        let mut a = doc("x");
        a.doc_id = "cpic-cyp2c19-clopidogrel".into();
        let mut b = a.clone();
        b.source = Source::PharmGkb;
        let expected = BTreeSet::from([Source::Cpic]);
        assert_eq!(
            Corpus::assemble([a, b], &expected),
            Err(CorpusError::DuplicateDocId("cpic-cyp2c19-clopidogrel".into()))
        );
    }

    #[test]
    fn source_filter_counts_exclusions() {
        let mut a = doc("x");
        a.doc_id = "a".into();
        let mut b = doc("y");
        b.doc_id = "b".into();
        b.source = Source::PharmGkb;
        let corpus = Corpus::assemble([a, b], &BTreeSet::from([Source::Cpic])).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.excluded(), 1);
        assert_eq!(corpus.sources(), BTreeSet::from([Source::Cpic]));
    }

    #[test]
    fn document_validation() {
        let mut d = doc("x");
        d.drugs = vec!["Warfarin".into()];
        assert_eq!(d.validate(), Err(DocumentError::DrugCase("Warfarin".into())));
        d.drugs = vec!["warfarin".into(), "warfarin".into()];
        assert!(matches!(d.validate(), Err(DocumentError::DuplicateEntry(_, "drugs"))));
        d.drugs.clear();
        d.genes = vec!["cyp2c9".into()];
        assert_eq!(d.validate(), Err(DocumentError::GeneCase("cyp2c9".into())));
        d.genes.clear();
        d.doc_id = " ".into();
        assert_eq!(d.validate(), Err(DocumentError::EmptyId));
    }
}
