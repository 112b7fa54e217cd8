//! SHA-256 helpers for trace hashes, manifests and template digests.

use alloc::string::String;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Incremental hasher over length-prefixed fields, so that field boundaries
/// are unambiguous (`("ab", "c")` and `("a", "bc")` hash differently).
#[derive(Clone, Default)]
pub struct FieldHasher {
    inner: Sha256,
}

impl FieldHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        self.inner.update((bytes.len() as u64).to_le_bytes());
        self.inner.update(bytes);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.field(s.as_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.field(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.field(&v.to_bits().to_le_bytes())
    }

    pub fn finish_hex(self) -> String {
        hex::encode(self.inner.finalize())
    }
}
