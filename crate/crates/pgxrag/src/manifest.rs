//! Run manifests: the configuration snapshot behind a batch output file.

use pgxrag_core::digest::sha256_hex;
use pgxrag_core::PhaseConfig;
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = concat!("pgxrag ", env!("CARGO_PKG_VERSION"));

/// Everything that determines a run's output. Its digest is embedded in
/// every output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSnapshot {
    pub tool_version: String,
    pub group: String,
    pub phase_config: PhaseConfig,
    pub embedder_tag: String,
    pub backend_tag: String,
    pub template_digest: String,
    /// Digest of the index file and its chunk store.
    pub corpus_digest: String,
    pub dataset_digest: String,
}

impl ManifestSnapshot {
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("serializable"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub snapshot: ManifestSnapshot,
    /// Digest of `snapshot` (timestamps excluded).
    pub manifest_digest: String,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn new(snapshot: ManifestSnapshot, started_at: String, finished_at: String) -> Self {
        RunManifest {
            manifest_digest: snapshot.digest(),
            snapshot,
            started_at,
            finished_at,
        }
    }
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
