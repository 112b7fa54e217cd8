//! Append-only annotation log with a single serialized writer.
//!
//! Each accepted record is written as one JSON line and fsynced before the
//! append returns. On open the log is replayed; a torn final line (a crash
//! mid-write) is cut off, while a bad line anywhere else is reported.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use pgxrag_core::eval::metrics::{latest_per_key, AnnotationError};
use pgxrag_core::eval::AnnotationRecord;

pub const STORE_FILE: &str = "annotations.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("annotation store: {0}")]
    Io(#[from] io::Error),
    #[error("{}:{line}: corrupt annotation record: {message}", path.display())]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] AnnotationError),
    #[error("submission token {0:?} was already used")]
    DuplicateToken(String),
}

impl StoreError {
    pub fn class(&self) -> &'static str {
        match self {
            StoreError::Io(_) => "IoFailure",
            StoreError::Corrupt { .. } => "CorruptStore",
            StoreError::Invalid(_) => "SchemaViolation",
            StoreError::DuplicateToken(_) => "DuplicateSubmission",
        }
    }
}

struct Inner {
    file: File,
    records: Vec<AnnotationRecord>,
    tokens: BTreeSet<String>,
}

pub struct AnnotationStore {
    path: PathBuf,
    inner: RwLock<Inner>,
}

impl AnnotationStore {
    /// Opens `<dir>/annotations.jsonl`, creating the directory and file.
    pub fn open_dir(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        Self::open(&dir.join(STORE_FILE))
    }

    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let mut records = Vec::new();
        let mut good_len = 0;
        let mut line_no = 0;
        let mut rest = bytes.as_slice();
        while !rest.is_empty() {
            line_no += 1;
            let (line, terminated) = match rest.iter().position(|b| *b == b'\n') {
                Some(i) => (&rest[..i], true),
                None => (rest, false),
            };
            let consumed = line.len() + usize::from(terminated);
            let parsed = std::str::from_utf8(line)
                .map_err(|e| e.to_string())
                .and_then(|s| {
                    if s.trim().is_empty() {
                        Ok(None)
                    } else {
                        let rec: AnnotationRecord = serde_json::from_str(s).map_err(|e| e.to_string())?;
                        rec.validate().map_err(|e| e.to_string())?;
                        Ok(Some(rec))
                    }
                });
            match parsed {
                // an unterminated tail that parses is kept; its newline is
                // restored below
                Ok(rec) => {
                    records.extend(rec);
                    good_len += consumed;
                }
                Err(_) if !terminated => break,
                Err(message) => {
                    return Err(StoreError::Corrupt {
                        path: path.to_path_buf(),
                        line: line_no,
                        message,
                    })
                }
            }
            rest = &rest[consumed..];
        }
        if good_len < bytes.len() {
            OpenOptions::new().write(true).open(path)?.set_len(good_len as u64)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if good_len > 0 && bytes[good_len - 1] != b'\n' {
            file.write_all(b"\n")?;
        }
        file.sync_all()?;
        let tokens = records.iter().filter_map(|r| r.submission_token.clone()).collect();
        Ok(AnnotationStore {
            path: path.to_path_buf(),
            inner: RwLock::new(Inner { file, records, tokens }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates, writes and fsyncs one record; returns only once durable.
    pub fn append(&self, record: AnnotationRecord) -> Result<AnnotationRecord, StoreError> {
        record.validate()?;
        let mut line = serde_json::to_vec(&record).map_err(io::Error::from)?;
        line.push(b'\n');
        let mut inner = self.inner.write().unwrap_or_else(|p| p.into_inner());
        if let Some(t) = &record.submission_token {
            if inner.tokens.contains(t) {
                return Err(StoreError::DuplicateToken(t.clone()));
            }
        }
        inner.file.write_all(&line)?;
        inner.file.sync_data()?;
        if let Some(t) = &record.submission_token {
            inner.tokens.insert(t.clone());
        }
        inner.records.push(record.clone());
        Ok(record)
    }

    /// Every record in log order.
    pub fn all(&self) -> Vec<AnnotationRecord> {
        self.inner.read().unwrap_or_else(|p| p.into_inner()).records.clone()
    }

    /// Effective records: last per (response_ref, annotator_id).
    pub fn latest(&self) -> Vec<AnnotationRecord> {
        latest_per_key(self.all())
    }

    pub fn groups(&self) -> BTreeSet<String> {
        self.inner
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .records
            .iter()
            .map(|r| r.response_ref.group.clone())
            .collect()
    }
}
