//! Exact cosine-similarity index over chunk embeddings.
//!
//! Vectors are stored as `f32`, the on-disk precision, so that a persisted and
//! reopened index is bitwise identical to the one that was built. Scores are
//! accumulated in `f64`.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::embed::{Embedder, EmbedError, EmbeddingVector, UNIT_NORM_TOLERANCE};

pub const DEFAULT_TOP_K: usize = 4;
/// Unit-norm tolerance for stored `f32` vectors.
pub const STORED_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("cannot build an index from zero chunks")]
    EmptyCorpus,
    #[error("duplicate chunk id {0:?}")]
    DuplicateChunkId(String),
    #[error("embedding chunk {chunk_id:?} failed: {source}")]
    Embed { chunk_id: String, source: EmbedError },
    #[error("vector for {chunk_id:?} has dimension {got}, index dimension is {expected}")]
    DimensionMismatch { chunk_id: String, expected: usize, got: usize },
    #[error("vector for {0:?} is not unit norm")]
    NotUnitNorm(String),
    #[error("index dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("query dimension {got} does not match index dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub chunk_id: String,
    pub vector: Vec<f32>,
}

/// Immutable exact-search index. Entries are kept in lexical chunk-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    backend_tag: String,
    entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub chunk_id: String,
    pub score: f64,
}

/// Non-increasing score, ties by ascending chunk id.
pub fn rank_order(a: &ScoredHit, b: &ScoredHit) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.chunk_id.cmp(&b.chunk_id))
}

/// Dot product of two unit vectors.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SearchError> {
    if a.dim() != b.dim() {
        return Err(SearchError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    debug_assert!((a.norm() - 1.0).abs() <= UNIT_NORM_TOLERANCE);
    debug_assert!((b.norm() - 1.0).abs() <= UNIT_NORM_TOLERANCE);
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum())
}

impl VectorIndex {
    /// Assembles an index from already-embedded entries, validating ids,
    /// dimensions and norms.
    pub fn from_entries(
        dim: usize,
        backend_tag: String,
        mut entries: Vec<IndexEntry>,
    ) -> Result<Self, IndexError> {
        if dim == 0 {
            return Err(IndexError::ZeroDimension);
        }
        let mut seen = BTreeSet::new();
        for entry in &entries {
            if !seen.insert(entry.chunk_id.as_str()) {
                return Err(IndexError::DuplicateChunkId(entry.chunk_id.clone()));
            }
            if entry.vector.len() != dim {
                return Err(IndexError::DimensionMismatch {
                    chunk_id: entry.chunk_id.clone(),
                    expected: dim,
                    got: entry.vector.len(),
                });
            }
            let norm = libm::sqrt(entry.vector.iter().map(|v| f64::from(*v) * f64::from(*v)).sum());
            if (norm - 1.0).abs() > STORED_NORM_TOLERANCE {
                return Err(IndexError::NotUnitNorm(entry.chunk_id.clone()));
            }
        }
        entries.sort_by(|a, b| a.chunk_id.cmp(&b.chunk_id));
        Ok(VectorIndex {
            dim,
            backend_tag,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend_tag(&self) -> &str {
        &self.backend_tag
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, chunk_id: &str) -> bool {
        self.entries
            .binary_search_by(|e| e.chunk_id.as_str().cmp(chunk_id))
            .is_ok()
    }

    /// Exact top-k by cosine score, `min(k, len)` hits.
    pub fn search_top_k(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredHit>, SearchError> {
        if k == 0 {
            return Err(SearchError::ZeroK);
        }
        if query.dim() != self.dim {
            return Err(SearchError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        let mut hits: Vec<ScoredHit> = self
            .entries
            .iter()
            .map(|e| ScoredHit {
                chunk_id: e.chunk_id.clone(),
                score: score(&e.vector, query.values()),
            })
            .collect();
        let k = k.min(hits.len());
        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, rank_order);
            hits.truncate(k);
        }
        hits.sort_by(rank_order);
        Ok(hits)
    }
}

fn score(stored: &[f32], query: &[f64]) -> f64 {
    let dot: f64 = stored.iter().zip(query).map(|(s, q)| f64::from(*s) * q).sum();
    dot.clamp(-1.0, 1.0)
}

/// Embeds every chunk with `embedder`. Vectors are assembled in chunk order.
pub fn build_index<E: Embedder + ?Sized>(chunks: &[Chunk], embedder: &E) -> Result<VectorIndex, IndexError> {
    if chunks.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let mut seen = BTreeSet::new();
    for c in chunks {
        if !seen.insert(c.chunk_id.as_str()) {
            return Err(IndexError::DuplicateChunkId(c.chunk_id.clone()));
        }
    }
    let mut entries = Vec::with_capacity(chunks.len());
    for c in chunks {
        let v = embedder.embed(&c.text).map_err(|source| IndexError::Embed {
            chunk_id: c.chunk_id.clone(),
            source,
        })?;
        entries.push(IndexEntry {
            chunk_id: c.chunk_id.clone(),
            vector: v.values().iter().map(|x| *x as f32).collect(),
        });
    }
    VectorIndex::from_entries(embedder.dim(), embedder.tag(), entries)
}
