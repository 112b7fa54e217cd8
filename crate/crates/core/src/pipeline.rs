//! Query answering: embed, retrieve top-k, optionally add targeted drug/gene
//! sub-queries (phase 3), fit the context budget, summarize each retained
//! chunk (layer 1) and synthesize the answer (layer 2).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Chunk, ChunkError, Corpus, Source};
use crate::digest::FieldHasher;
use crate::embed::{EmbedError, Embedder};
use crate::generate::{GenerationBackend, GenerationError, GenerationRequest, Summary, Task, TEMPERATURE};
use crate::index::{build_index, rank_order, IndexError, ScoredHit, SearchError, VectorIndex, DEFAULT_TOP_K};
use crate::lexicon::GuidelineLexicon;
use crate::prompt::{PromptError, PromptSet};
use crate::targets::{extract_targets, TargetEntities};

pub const PHASE12_CONTEXT_BUDGET: usize = 4096;
pub const PHASE3_CONTEXT_BUDGET: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Phase1,
    Phase2,
    Phase3,
}

impl Phase {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Phase::Phase1),
            2 => Some(Phase::Phase2),
            3 => Some(Phase::Phase3),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Phase::Phase1 => 1,
            Phase::Phase2 => 2,
            Phase::Phase3 => 3,
        }
    }

    /// Knowledge sources each phase may draw from.
    pub fn sources(self) -> BTreeSet<Source> {
        match self {
            Phase::Phase1 => BTreeSet::from([Source::Cpic]),
            Phase::Phase2 | Phase::Phase3 => BTreeSet::from([Source::Cpic, Source::PharmGkb]),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phase{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub phase: Phase,
    pub sources: BTreeSet<Source>,
    pub k_primary: usize,
    pub k_supplementary: usize,
    pub temperature: f64,
    pub context_token_budget: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("temperature must be 0, got {0}")]
    NonZeroTemperature(f64),
    #[error("k_primary must be at least 1")]
    ZeroPrimaryK,
    #[error("k_supplementary must be positive exactly in phase 3")]
    SupplementaryK,
    #[error("context budget must be positive")]
    ZeroBudget,
    #[error("sources {found:?} do not match {phase}")]
    Sources { phase: Phase, found: Vec<Source> },
}

impl PhaseConfig {
    pub fn for_phase(phase: Phase) -> Self {
        let phase3 = phase == Phase::Phase3;
        PhaseConfig {
            phase,
            sources: phase.sources(),
            k_primary: DEFAULT_TOP_K,
            k_supplementary: if phase3 { DEFAULT_TOP_K } else { 0 },
            temperature: TEMPERATURE,
            context_token_budget: if phase3 {
                PHASE3_CONTEXT_BUDGET
            } else {
                PHASE12_CONTEXT_BUDGET
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.temperature != 0.0 {
            return Err(ConfigError::NonZeroTemperature(self.temperature));
        }
        if self.k_primary == 0 {
            return Err(ConfigError::ZeroPrimaryK);
        }
        if (self.k_supplementary > 0) != (self.phase == Phase::Phase3) {
            return Err(ConfigError::SupplementaryK);
        }
        if self.context_token_budget == 0 {
            return Err(ConfigError::ZeroBudget);
        }
        if self.sources != self.phase.sources() {
            return Err(ConfigError::Sources {
                phase: self.phase,
                found: self.sources.iter().copied().collect(),
            });
        }
        Ok(())
    }

    fn hash_into(&self, h: &mut FieldHasher) {
        h.u64(u64::from(self.phase.number()));
        for s in &self.sources {
            h.str(s.as_str());
        }
        h.u64(self.k_primary as u64)
            .u64(self.k_supplementary as u64)
            .f64(self.temperature)
            .u64(self.context_token_budget as u64);
    }
}

/// A chunk plus the provenance the pipeline needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbChunk {
    #[serde(flatten)]
    pub chunk: Chunk,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KnowledgeBaseError {
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("index and chunk store disagree on chunk {0:?}")]
    Inconsistent(String),
}

/// Chunk store plus the vector index built over it.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    chunks: BTreeMap<String, KbChunk>,
    index: VectorIndex,
}

impl KnowledgeBase {
    pub fn new(chunks: Vec<KbChunk>, index: VectorIndex) -> Result<Self, KnowledgeBaseError> {
        let mut map = BTreeMap::new();
        for c in chunks {
            let id = c.chunk.chunk_id.clone();
            if map.insert(id.clone(), c).is_some() {
                return Err(KnowledgeBaseError::Inconsistent(id));
            }
        }
        if let Some(e) = index.entries().iter().find(|e| !map.contains_key(&e.chunk_id)) {
            return Err(KnowledgeBaseError::Inconsistent(e.chunk_id.clone()));
        }
        if let Some(id) = map.keys().find(|k| !index.contains(k)) {
            return Err(KnowledgeBaseError::Inconsistent(id.clone()));
        }
        Ok(KnowledgeBase { chunks: map, index })
    }

    /// Chunks and embeds every document of `corpus`.
    pub fn build<E: Embedder + ?Sized>(
        corpus: &Corpus,
        max_chunk_tokens: usize,
        embedder: &E,
    ) -> Result<Self, KnowledgeBaseError> {
        let sources = corpus.source_by_doc();
        let chunks = corpus.chunk_all(max_chunk_tokens)?;
        let index = build_index(&chunks, embedder)?;
        let kb_chunks = chunks
            .into_iter()
            .map(|chunk| {
                let source = sources[chunk.doc_id.as_str()];
                KbChunk { chunk, source }
            })
            .collect();
        Self::new(kb_chunks, index)
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&KbChunk> {
        self.chunks.get(chunk_id)
    }

    /// Chunks in chunk-id order.
    pub fn chunks(&self) -> impl Iterator<Item = &KbChunk> {
        self.chunks.values()
    }

    pub fn sources(&self) -> BTreeSet<Source> {
        self.chunks.values().map(|c| c.source).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResponse {
    pub query_id: String,
    pub query_text: String,
    pub phase: Phase,
    pub hits: Vec<ScoredHit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetEntities>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supplementary_queries: Vec<String>,
    pub summaries: Vec<Summary>,
    pub answer: String,
    pub backend_tag: String,
    pub embedder_tag: String,
    /// Whitespace tokens of chunk text sent to layer 1.
    pub context_tokens: usize,
    pub trace_hash: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config: {phase} does not allow {found} documents in the index")]
    ConfigMismatch { phase: Phase, found: Source },
    #[error("config: index was built by {index}, query embedder is {embedder}")]
    EmbedderMismatch { index: String, embedder: String },
    #[error("embed: {0}")]
    Embed(#[from] EmbedError),
    #[error("retrieve: {0}")]
    Search(#[from] SearchError),
    #[error("retrieve: chunk {0:?} missing from the chunk store")]
    MissingChunk(String),
    #[error("summarize {chunk_id}: {source}")]
    Summarize { chunk_id: String, source: GenerationError },
    #[error("synthesize: no summaries to synthesize")]
    NoSummaries,
    #[error("synthesize: {0}")]
    Synthesize(GenerationError),
    #[error("prompt: {0}")]
    Prompt(#[from] PromptError),
}

impl PipelineError {
    /// Pipeline stage the error came from.
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_)
            | PipelineError::ConfigMismatch { .. }
            | PipelineError::EmbedderMismatch { .. } => "config",
            PipelineError::Embed(_) => "embed",
            PipelineError::Search(_) | PipelineError::MissingChunk(_) => "retrieve",
            PipelineError::Summarize { .. } => "summarize",
            PipelineError::NoSummaries | PipelineError::Synthesize(_) => "synthesize",
            PipelineError::Prompt(_) => "prompt",
        }
    }

    pub fn is_backend_unavailable(&self) -> bool {
        matches!(
            self,
            PipelineError::Embed(EmbedError::BackendUnavailable(_))
                | PipelineError::Summarize {
                    source: GenerationError::BackendUnavailable(_),
                    ..
                }
                | PipelineError::Synthesize(GenerationError::BackendUnavailable(_))
        )
    }
}

/// Formats summaries for `{all_summaries}`.
pub fn number_summaries(summaries: &[Summary]) -> String {
    let items: Vec<String> = summaries
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. [{}] {}", i + 1, s.source, s.text))
        .collect();
    items.join("\n\n")
}

/// Stateless pipeline over borrowed configuration.
#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    pub kb: &'a KnowledgeBase,
    pub embedder: &'a dyn Embedder,
    pub generator: &'a dyn GenerationBackend,
    pub prompts: &'a PromptSet,
    pub lexicon: &'a GuidelineLexicon,
}

impl Pipeline<'_> {
    pub fn summarize_chunk(&self, query: &str, chunk: &KbChunk) -> Result<Summary, PipelineError> {
        let source = chunk.chunk.doc_id.as_str();
        let system = self.prompts.layer1_system.render(&BTreeMap::new())?;
        let user = self.prompts.layer1_user.render(&BTreeMap::from([
            ("source", source),
            ("query", query),
            ("content", chunk.chunk.text.as_str()),
        ]))?;
        let request = GenerationRequest {
            system,
            user,
            temperature: TEMPERATURE,
            task: Task::Summarize {
                query,
                source,
                content: &chunk.chunk.text,
            },
        };
        let text = self
            .generator
            .generate(&request)
            .map_err(|source| PipelineError::Summarize {
                chunk_id: chunk.chunk.chunk_id.clone(),
                source,
            })?;
        Ok(Summary {
            chunk_id: chunk.chunk.chunk_id.clone(),
            source: source.to_string(),
            text,
        })
    }

    pub fn synthesize_answer(&self, query: &str, summaries: &[Summary]) -> Result<String, PipelineError> {
        synthesize_answer(query, summaries, self.generator, self.prompts)
    }

    /// Retrieval stage only: candidate hits after phase-3 expansion and the
    /// context budget, plus the targets and sub-queries that produced them.
    pub fn retrieve(
        &self,
        query: &str,
        config: &PhaseConfig,
    ) -> Result<(Vec<ScoredHit>, Option<TargetEntities>, Vec<String>, usize), PipelineError> {
        let q = self.embedder.embed(query)?;
        let mut candidates = self.kb.index().search_top_k(&q, config.k_primary)?;
        let mut targets = None;
        let mut sub_queries = Vec::new();
        if config.phase == Phase::Phase3 {
            let t = extract_targets(query, self.lexicon);
            let mut best: BTreeMap<String, f64> =
                candidates.iter().map(|h| (h.chunk_id.clone(), h.score)).collect();
            for entity in t.all() {
                let sub = format!("{entity} {query}");
                let v = self.embedder.embed(&sub)?;
                for hit in self.kb.index().search_top_k(&v, config.k_supplementary)? {
                    let slot = best.entry(hit.chunk_id).or_insert(hit.score);
                    if hit.score > *slot {
                        *slot = hit.score;
                    }
                }
                sub_queries.push(sub);
            }
            candidates = best
                .into_iter()
                .map(|(chunk_id, score)| ScoredHit { chunk_id, score })
                .collect();
            candidates.sort_by(rank_order);
            targets = Some(t);
        }

        let mut kept = Vec::new();
        let mut used = 0;
        for hit in candidates {
            let chunk = self
                .kb
                .chunk(&hit.chunk_id)
                .ok_or_else(|| PipelineError::MissingChunk(hit.chunk_id.clone()))?;
            if used + chunk.chunk.token_estimate <= config.context_token_budget {
                used += chunk.chunk.token_estimate;
                kept.push(hit);
            }
        }
        Ok((kept, targets, sub_queries, used))
    }

    pub fn answer_query(
        &self,
        query_id: &str,
        query: &str,
        config: &PhaseConfig,
    ) -> Result<PipelineResponse, PipelineError> {
        config.validate()?;
        if let Some(found) = self.kb.sources().into_iter().find(|s| !config.sources.contains(s)) {
            return Err(PipelineError::ConfigMismatch {
                phase: config.phase,
                found,
            });
        }
        let embedder_tag = self.embedder.tag();
        if embedder_tag != self.kb.index().backend_tag() {
            return Err(PipelineError::EmbedderMismatch {
                index: self.kb.index().backend_tag().to_string(),
                embedder: embedder_tag,
            });
        }

        let (hits, targets, supplementary_queries, context_tokens) = self.retrieve(query, config)?;
        let mut summaries = Vec::with_capacity(hits.len());
        for hit in &hits {
            let chunk = self
                .kb
                .chunk(&hit.chunk_id)
                .ok_or_else(|| PipelineError::MissingChunk(hit.chunk_id.clone()))?;
            summaries.push(self.summarize_chunk(query, chunk)?);
        }
        let answer = self.synthesize_answer(query, &summaries)?;
        let backend_tag = self.generator.tag();

        let mut h = FieldHasher::new();
        h.str(query);
        config.hash_into(&mut h);
        h.str(&backend_tag).str(&embedder_tag).str(self.prompts.digest().as_str());
        for hit in &hits {
            h.str(&hit.chunk_id);
        }
        for s in &summaries {
            h.str(&s.chunk_id).str(&s.text);
        }
        h.str(&answer);

        Ok(PipelineResponse {
            query_id: query_id.to_string(),
            query_text: query.to_string(),
            phase: config.phase,
            hits,
            targets,
            supplementary_queries,
            summaries,
            answer,
            backend_tag,
            embedder_tag,
            context_tokens,
            trace_hash: h.finish_hex(),
        })
    }
}

/// Layer 2: one backend call over the numbered summaries.
pub fn synthesize_answer(
    query: &str,
    summaries: &[Summary],
    generator: &dyn GenerationBackend,
    prompts: &PromptSet,
) -> Result<String, PipelineError> {
    if summaries.is_empty() {
        return Err(PipelineError::NoSummaries);
    }
    let numbered = number_summaries(summaries);
    let system = prompts.layer2_system.render(&BTreeMap::new())?;
    let user = prompts
        .layer2_user
        .render(&BTreeMap::from([("user_input", query), ("all_summaries", numbered.as_str())]))?;
    let request = GenerationRequest {
        system,
        user,
        temperature: TEMPERATURE,
        task: Task::Synthesize { query, summaries },
    };
    generator.generate(&request).map_err(PipelineError::Synthesize)
}
