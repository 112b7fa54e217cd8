//! Binary index file.
//!
//! ```text
//! magic     "PGXIDX1"
//! version   u16
//! dim       u32
//! count     u32
//! tag_len   u16, then tag_len bytes of UTF-8 backend tag
//! checksum  32 bytes, SHA-256 of everything after it
//! ids       count x (u16 length + UTF-8 chunk id), lexical order
//! vectors   count x dim f32, same order
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use pgxrag_core::index::{IndexEntry, IndexError};
use pgxrag_core::VectorIndex;
use sha2::{Digest, Sha256};

pub const MAGIC: &[u8; 7] = b"PGXIDX1";
pub const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IndexFileError {
    #[error("{0}")]
    IoFailure(#[from] io::Error),
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("index format version {found} is not supported (expected {VERSION})")]
    VersionMismatch { found: u16 },
}

impl IndexFileError {
    pub fn class(&self) -> &'static str {
        match self {
            IndexFileError::IoFailure(_) => "IoFailure",
            IndexFileError::CorruptIndex(_) => "CorruptIndex",
            IndexFileError::VersionMismatch { .. } => "VersionMismatch",
        }
    }
}

fn corrupt(msg: impl Into<String>) -> IndexFileError {
    IndexFileError::CorruptIndex(msg.into())
}

pub fn encode_index(index: &VectorIndex) -> Vec<u8> {
    let mut body = Vec::new();
    for e in index.entries() {
        let id = e.chunk_id.as_bytes();
        body.extend_from_slice(&(id.len() as u16).to_le_bytes());
        body.extend_from_slice(id);
    }
    for e in index.entries() {
        for v in &e.vector {
            body.extend_from_slice(&v.to_le_bytes());
        }
    }
    let tag = index.backend_tag().as_bytes();
    let mut out = Vec::with_capacity(body.len() + 64 + tag.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(index.len() as u32).to_le_bytes());
    out.extend_from_slice(&(tag.len() as u16).to_le_bytes());
    out.extend_from_slice(tag);
    out.extend_from_slice(&Sha256::digest(&body));
    out.extend_from_slice(&body);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexFileError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt("unexpected end of file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, IndexFileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_index(bytes: &[u8]) -> Result<VectorIndex, IndexFileError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
        return Err(corrupt("bad magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(IndexFileError::VersionMismatch { found: version });
    }
    let dim = r.u32()? as usize;
    let count = r.u32()? as usize;
    let tag_len = r.u16()? as usize;
    let tag = std::str::from_utf8(r.take(tag_len)?)
        .map_err(|_| corrupt("backend tag is not UTF-8"))?
        .to_string();
    let checksum = r.take(32)?;
    let body = &bytes[r.pos..];
    if Sha256::digest(body).as_slice() != checksum {
        return Err(corrupt("checksum mismatch"));
    }
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u16()? as usize;
        let id = std::str::from_utf8(r.take(len)?).map_err(|_| corrupt("chunk id is not UTF-8"))?;
        ids.push(id.to_string());
    }
    let mut entries = Vec::with_capacity(count);
    for chunk_id in ids {
        let raw = r.take(dim.checked_mul(4).ok_or_else(|| corrupt("dimension overflow"))?)?;
        let vector = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        entries.push(IndexEntry { chunk_id, vector });
    }
    if r.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    if entries.windows(2).any(|w| w[0].chunk_id >= w[1].chunk_id) {
        return Err(corrupt("chunk ids out of order"));
    }
    VectorIndex::from_entries(dim, tag, entries).map_err(|e: IndexError| corrupt(e.to_string()))
}

/// Writes atomically (temporary file, then rename).
pub fn persist_index(index: &VectorIndex, path: &Path) -> Result<(), IndexFileError> {
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode_index(index))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn open_index(path: &Path) -> Result<VectorIndex, IndexFileError> {
    decode_index(&fs::read(path)?)
}
