//! TOML configuration and backend construction.
//!
//! Every key is optional; a missing file means all defaults.
//!
//! ```toml
//! [embedding]
//! backend = "offline"            # offline | remote
//! dim = 64                       # offline bucket count, or remote vector size
//! endpoint = "https://api.openai.com/v1"
//! model = "text-embedding-3-small"
//!
//! [generation]
//! backend = "offline"            # offline | remote | cassette
//! endpoint = "https://api.openai.com/v1"
//! model = "gpt-4o-mini"
//! cassette = "fixtures/cassettes/ivacaftor.jsonl"
//! timeout_secs = 60
//!
//! [chunking]
//! max_chunk_tokens = 512
//!
//! [retrieval]
//! k_primary = 4
//! k_supplementary = 4            # phase 3 only
//! context_token_budget = 4096    # phases 1 and 2
//! phase3_context_token_budget = 8192
//! ```
//!
//! The API key for remote backends is read from `PGXRAG_API_KEY`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use pgxrag_core::corpus::DEFAULT_MAX_CHUNK_TOKENS;
use pgxrag_core::embed::DEFAULT_OFFLINE_DIM;
use pgxrag_core::generate::{GenerationBackend, OfflineGenerator};
use pgxrag_core::index::DEFAULT_TOP_K;
use pgxrag_core::pipeline::{PHASE12_CONTEXT_BUDGET, PHASE3_CONTEXT_BUDGET};
use pgxrag_core::{Embedder, GuidelineLexicon, HashedBagOfWords, Phase, PhaseConfig};
use serde::{Deserialize, Serialize};

use crate::backends::{CassetteBackend, RemoteEmbedder, RemoteGenerator, RemoteSettings, API_KEY_ENV};
use crate::files::{read_text, LoadError};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-3-small";
pub const DEFAULT_GENERATION_MODEL: &str = "gpt-4o-mini";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Offline,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GenerationKind {
    Offline,
    Remote,
    Cassette,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub backend: EmbeddingKind,
    pub dim: Option<usize>,
    pub endpoint: String,
    pub model: String,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            backend: EmbeddingKind::Offline,
            dim: None,
            endpoint: DEFAULT_ENDPOINT.into(),
            model: DEFAULT_EMBEDDING_MODEL.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub backend: GenerationKind,
    pub endpoint: String,
    pub model: String,
    pub cassette: Option<PathBuf>,
    pub timeout_secs: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            backend: GenerationKind::Offline,
            endpoint: DEFAULT_ENDPOINT.into(),
            model: DEFAULT_GENERATION_MODEL.into(),
            cassette: None,
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkingConfig {
    pub max_chunk_tokens: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            max_chunk_tokens: DEFAULT_MAX_CHUNK_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k_primary: usize,
    pub k_supplementary: usize,
    pub context_token_budget: usize,
    pub phase3_context_token_budget: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            k_primary: DEFAULT_TOP_K,
            k_supplementary: DEFAULT_TOP_K,
            context_token_budget: PHASE12_CONTEXT_BUDGET,
            phase3_context_token_budget: PHASE3_CONTEXT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub embedding: EmbeddingConfig,
    pub generation: GenerationConfig,
    pub chunking: ChunkingConfig,
    pub retrieval: RetrievalConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("{0}")]
    Backend(String),
}

impl ConfigFileError {
    pub fn class(&self) -> &'static str {
        match self {
            ConfigFileError::Load(e) => e.class(),
            ConfigFileError::Invalid { .. } => "InvalidConfig",
            ConfigFileError::Backend(_) => "BackendUnavailable",
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        toml::from_str(&read_text(path)?).map_err(|e| ConfigFileError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigFileError> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }

    pub fn phase_config(&self, phase: Phase) -> PhaseConfig {
        let mut c = PhaseConfig::for_phase(phase);
        c.k_primary = self.retrieval.k_primary;
        if phase == Phase::Phase3 {
            c.k_supplementary = self.retrieval.k_supplementary;
            c.context_token_budget = self.retrieval.phase3_context_token_budget;
        } else {
            c.context_token_budget = self.retrieval.context_token_budget;
        }
        c
    }

    fn api_key() -> Option<String> {
        std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty())
    }

    fn embedding_settings(&self, model: &str) -> RemoteSettings {
        RemoteSettings {
            endpoint: self.embedding.endpoint.clone(),
            model: model.to_string(),
            api_key: Self::api_key(),
            timeout: Duration::from_secs(self.generation.timeout_secs),
        }
    }

    fn generation_settings(&self) -> RemoteSettings {
        RemoteSettings {
            endpoint: self.generation.endpoint.clone(),
            model: self.generation.model.clone(),
            api_key: Self::api_key(),
            timeout: Duration::from_secs(self.generation.timeout_secs),
        }
    }

    /// Embedder used to build a new index.
    pub fn embedder(&self, kind: Option<EmbeddingKind>) -> Box<dyn Embedder + Send + Sync> {
        match kind.unwrap_or(self.embedding.backend) {
            EmbeddingKind::Offline => Box::new(HashedBagOfWords::new(self.embedding.dim.unwrap_or(DEFAULT_OFFLINE_DIM))),
            EmbeddingKind::Remote => Box::new(RemoteEmbedder::new(
                self.embedding_settings(&self.embedding.model),
                self.embedding.dim.unwrap_or(1536),
            )),
        }
    }

    /// Query embedder matching the one recorded in an index's backend tag.
    pub fn embedder_for_tag(&self, tag: &str) -> Result<Box<dyn Embedder + Send + Sync>, ConfigFileError> {
        if let Some(e) = HashedBagOfWords::from_tag(tag) {
            return Ok(Box::new(e));
        }
        if let Some((model, dim)) = RemoteEmbedder::parse_tag(tag) {
            return Ok(Box::new(RemoteEmbedder::new(self.embedding_settings(model), dim)));
        }
        Err(ConfigFileError::Backend(format!("no embedder known for index tag {tag:?}")))
    }

    pub fn generator(
        &self,
        kind: Option<GenerationKind>,
        cassette: Option<&Path>,
        lexicon: &GuidelineLexicon,
    ) -> Result<Box<dyn GenerationBackend + Send + Sync>, ConfigFileError> {
        Ok(match kind.unwrap_or(self.generation.backend) {
            GenerationKind::Offline => Box::new(OfflineGenerator::new(lexicon.clone())),
            GenerationKind::Remote => Box::new(RemoteGenerator::new(self.generation_settings())),
            GenerationKind::Cassette => {
                let path = cassette
                    .map(Path::to_path_buf)
                    .or_else(|| self.generation.cassette.clone())
                    .ok_or_else(|| ConfigFileError::Backend("cassette backend needs a cassette file".into()))?;
                Box::new(CassetteBackend::open(self.generation.model.clone(), &path)?)
            }
        })
    }
}
