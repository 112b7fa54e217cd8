//! Allocation-only core of `pgxrag`: a retrieval-augmented question-answering
//! engine for pharmacogenomic guideline knowledge bases, plus the metrics and
//! statistics used to benchmark it.
//!
//! Everything in this crate is pure computation over in-memory values. File
//! formats, remote backends, the CLI and the HTTP service live in the `pgxrag`
//! companion crate.
//!
//! The flow mirrors the query workflow: a [`corpus::Document`] is split into
//! [`corpus::Chunk`]s, chunks are embedded into a [`index::VectorIndex`], a
//! query retrieves the top four chunks by cosine similarity, each chunk is
//! summarized with the layer-1 prompt and the summaries are synthesized with
//! the layer-2 prompt ([`pipeline::Pipeline::answer_query`]). The [`eval`] module holds
//! the benchmark dataset checks, rubric aggregation, recall/precision/F1, the
//! Wilcoxon signed-rank test and quiz scoring.

#![no_std]

extern crate alloc;

pub mod corpus;
pub mod digest;
pub mod embed;
pub mod eval;
pub mod generate;
pub mod index;
pub mod lexicon;
pub mod pipeline;
pub mod prompt;
pub mod targets;
pub mod text;

pub use corpus::{Chunk, ChunkingReport, Corpus, Document, Source};
pub use embed::{Embedder, EmbeddingVector, HashedBagOfWords};
pub use index::{ScoredHit, VectorIndex};
pub use lexicon::GuidelineLexicon;
pub use pipeline::{Phase, PhaseConfig, PipelineResponse};
pub use prompt::{PromptSet, PromptTemplate, TemplateId};
