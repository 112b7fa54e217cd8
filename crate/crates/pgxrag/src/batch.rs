//! Batch answering of a benchmark dataset.

use std::io;
use std::path::{Path, PathBuf};

use pgxrag_core::digest::{sha256_hex, FieldHasher};
use pgxrag_core::eval::QueryRecord;
use pgxrag_core::generate::GenerationError;
use pgxrag_core::pipeline::{Pipeline, PipelineError};
use pgxrag_core::{PhaseConfig, PipelineResponse};
use serde::{Deserialize, Serialize};

use crate::files::{write_json_pretty, write_jsonl};
use crate::kb::chunk_store_path;
use crate::manifest::{now_rfc3339, ManifestSnapshot, RunManifest};

/// One line of a responses file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub group: String,
    pub manifest_digest: String,
    #[serde(flatten)]
    pub response: PipelineResponse,
}

#[derive(Debug, thiserror::Error)]
#[error("query {query_id}: {source}")]
pub struct BatchError {
    pub query_id: String,
    pub source: PipelineError,
}

/// Machine-readable class for a pipeline failure.
pub fn pipeline_error_class(e: &PipelineError) -> &'static str {
    match e {
        _ if e.is_backend_unavailable() => "BackendUnavailable",
        PipelineError::Summarize {
            source: GenerationError::MissingRecording(_),
            ..
        }
        | PipelineError::Synthesize(GenerationError::MissingRecording(_)) => "MissingRecording",
        PipelineError::Config(_) => "InvalidConfig",
        PipelineError::ConfigMismatch { .. } => "ConfigMismatch",
        PipelineError::EmbedderMismatch { .. } => "EmbedderMismatch",
        PipelineError::Embed(_) => "EmbedFailure",
        _ => "PipelineFailure",
    }
}

pub struct BatchRun {
    pub records: Vec<ResponseRecord>,
    pub manifest: RunManifest,
}

/// Answers every query in dataset order.
pub fn run_batch(
    pipeline: &Pipeline<'_>,
    dataset: &[QueryRecord],
    config: &PhaseConfig,
    snapshot: ManifestSnapshot,
) -> Result<BatchRun, BatchError> {
    let started_at = now_rfc3339();
    let digest = snapshot.digest();
    let mut records = Vec::with_capacity(dataset.len());
    for q in dataset {
        let response = pipeline
            .answer_query(&q.query_id, &q.text, config)
            .map_err(|source| BatchError {
                query_id: q.query_id.clone(),
                source,
            })?;
        records.push(ResponseRecord {
            group: snapshot.group.clone(),
            manifest_digest: digest.clone(),
            response,
        });
    }
    Ok(BatchRun {
        records,
        manifest: RunManifest::new(snapshot, started_at, now_rfc3339()),
    })
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the responses file and its manifest sidecar.
pub fn write_batch(out: &Path, run: &BatchRun) -> io::Result<()> {
    write_jsonl(out, &run.records)?;
    write_json_pretty(&manifest_path(out), &run.manifest)
}

/// Digest of an index file and its chunk store.
pub fn corpus_digest(index_path: &Path) -> io::Result<String> {
    let mut h = FieldHasher::new();
    h.field(&std::fs::read(index_path)?)
        .field(&std::fs::read(chunk_store_path(index_path))?);
    Ok(h.finish_hex())
}

pub fn dataset_digest(records: &[QueryRecord]) -> String {
    let mut bytes = Vec::new();
    for r in records {
        serde_json::to_writer(&mut bytes, r).expect("serializable");
        bytes.push(b'\n');
    }
    sha256_hex(&bytes)
}
