//! Regenerates `fixtures/cassettes/ivacaftor.jsonl`.
//!
//! The provider question is answered in phase 1 over a CPIC-only index of the
//! sample corpus. Layer-1 calls are recorded from the offline summarizer; the
//! layer-2 call is recorded as the reference answer text in
//! `fixtures/cassettes/ivacaftor_answer.txt`.
//!
//! Run from the workspace root: `cargo run -p pgxrag --example record_ivacaftor`.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use pgxrag::backends::CassetteBackend;
use pgxrag::config::DEFAULT_GENERATION_MODEL;
use pgxrag::files;
use pgxrag_core::generate::{GenerationBackend, GenerationError, GenerationRequest, OfflineGenerator, Task};
use pgxrag_core::pipeline::{KnowledgeBase, Pipeline};
use pgxrag_core::{GuidelineLexicon, HashedBagOfWords, Phase, PhaseConfig, PromptSet, Source};

struct Scripted {
    offline: OfflineGenerator,
    answer: String,
}

impl GenerationBackend for Scripted {
    fn tag(&self) -> String {
        "scripted".into()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, GenerationError> {
        Ok(match request.task {
            Task::Summarize { query, source, content } => self.offline.summarize(query, source, content),
            Task::Synthesize { .. } => self.answer.clone(),
        })
    }
}

fn main() -> Result<()> {
    let dir = Path::new("fixtures/cassettes");
    let question = std::fs::read_to_string(dir.join("ivacaftor_question.txt")).context("question")?;
    let answer = std::fs::read_to_string(dir.join("ivacaftor_answer.txt")).context("answer")?;
    let out = dir.join("ivacaftor.jsonl");
    let _ = std::fs::remove_file(&out);

    let corpus = files::load_corpus(Path::new("corpus/sample_corpus.jsonl"), &BTreeSet::from([Source::Cpic]))?;
    let embedder = HashedBagOfWords::default();
    let kb = KnowledgeBase::build(&corpus, 512, &embedder)?;
    let lexicon = GuidelineLexicon::cpic26();
    let inner = Scripted {
        offline: OfflineGenerator::new(lexicon.clone()),
        answer,
    };
    let cassette = CassetteBackend::record(DEFAULT_GENERATION_MODEL, &out, Box::new(inner))?;
    let prompts = PromptSet::builtin();
    let pipeline = Pipeline {
        kb: &kb,
        embedder: &embedder,
        generator: &cassette,
        prompts: &prompts,
        lexicon: &lexicon,
    };
    let response = pipeline.answer_query("ivacaftor-provider", &question, &PhaseConfig::for_phase(Phase::Phase1))?;
    println!("recorded {} calls to {}", cassette.len(), out.display());
    for h in &response.hits {
        println!("  {} {:.4}", h.chunk_id, h.score);
    }
    Ok(())
}
