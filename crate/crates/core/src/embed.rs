//! Text embedding: the backend trait, unit-normalized vectors and the offline
//! hashed bag-of-words reference embedder.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::alnum_tokens;

pub const DEFAULT_OFFLINE_DIM: usize = 64;
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("text is empty")]
    EmptyText,
    #[error("text has no alphanumeric tokens; cosine similarity is undefined")]
    ZeroVector,
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A unit-normalized embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// L2-normalizes `raw`. All-zero input is rejected.
    pub fn normalize(raw: Vec<f64>) -> Result<Self, EmbedError> {
        let norm = l2_norm(&raw);
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbedError::ZeroVector);
        }
        Ok(EmbeddingVector {
            values: raw.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

pub fn l2_norm(values: &[f64]) -> f64 {
    libm::sqrt(values.iter().map(|v| v * v).sum())
}

/// An embedding backend. Implementors return raw vectors; [`Embedder::embed`]
/// validates and normalizes them.
pub trait Embedder {
    fn dim(&self) -> usize;

    /// Identifies the model that produced the vectors; recorded in every index.
    fn tag(&self) -> String;

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let raw = self.embed_raw(text)?;
        if raw.len() != self.dim() {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim(),
                got: raw.len(),
            });
        }
        EmbeddingVector::normalize(raw)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Deterministic offline embedder: every lowercased alphanumeric token adds
/// one to bucket `fnv1a64(token) mod dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBagOfWords {
    dim: usize,
}

impl HashedBagOfWords {
    pub const TAG_PREFIX: &'static str = "offline-hbow-fnv1a64-d";

    /// # Panics
    /// If `dim` is zero.
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedBagOfWords { dim }
    }

    /// Recovers the embedder from an index backend tag.
    pub fn from_tag(tag: &str) -> Option<Self> {
        let dim: usize = tag.strip_prefix(Self::TAG_PREFIX)?.parse().ok()?;
        (dim > 0).then(|| Self::new(dim))
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.dim as u64) as usize
    }
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        Self::new(DEFAULT_OFFLINE_DIM)
    }
}

impl Embedder for HashedBagOfWords {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tag(&self) -> String {
        format!("{}{}", Self::TAG_PREFIX, self.dim)
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut counts = vec![0.0; self.dim];
        for token in alnum_tokens(text) {
            counts[self.bucket(&token)] += 1.0;
        }
        Ok(counts)
    }
}
