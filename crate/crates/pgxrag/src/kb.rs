//! A persisted knowledge base: the index file plus a chunk-store sidecar
//! (`<index>.chunks.jsonl`) carrying chunk text and source.

use std::path::{Path, PathBuf};

use pgxrag_core::pipeline::{KbChunk, KnowledgeBase, KnowledgeBaseError};

use crate::files::{self, LoadError};
use crate::index_file::{self, IndexFileError};

#[derive(Debug, thiserror::Error)]
pub enum KbFileError {
    #[error(transparent)]
    Index(#[from] IndexFileError),
    #[error(transparent)]
    ChunkStore(#[from] LoadError),
    #[error("writing chunk store: {0}")]
    Write(#[from] std::io::Error),
    #[error("corrupt index: {0}")]
    Inconsistent(#[from] KnowledgeBaseError),
}

impl KbFileError {
    pub fn class(&self) -> &'static str {
        match self {
            KbFileError::Index(e) => e.class(),
            KbFileError::ChunkStore(e) => e.class(),
            KbFileError::Write(_) => "IoFailure",
            KbFileError::Inconsistent(_) => "CorruptIndex",
        }
    }
}

pub fn chunk_store_path(index_path: &Path) -> PathBuf {
    let mut s = index_path.as_os_str().to_owned();
    s.push(".chunks.jsonl");
    PathBuf::from(s)
}

pub fn save_knowledge_base(kb: &KnowledgeBase, index_path: &Path) -> Result<(), KbFileError> {
    let chunks: Vec<&KbChunk> = kb.chunks().collect();
    files::write_jsonl(&chunk_store_path(index_path), &chunks)?;
    index_file::persist_index(kb.index(), index_path)?;
    Ok(())
}

pub fn open_knowledge_base(index_path: &Path) -> Result<KnowledgeBase, KbFileError> {
    let index = index_file::open_index(index_path)?;
    let chunks: Vec<KbChunk> = files::read_jsonl(&chunk_store_path(index_path))?
        .into_iter()
        .map(|(_, c)| c)
        .collect();
    Ok(KnowledgeBase::new(chunks, index)?)
}
