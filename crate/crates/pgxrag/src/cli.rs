use std::collections::BTreeSet;
use std::fmt;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pgxrag::batch::{self, pipeline_error_class};
use pgxrag::config::{Config, EmbeddingKind, GenerationKind};
use pgxrag::files::{self, LoadError};
use pgxrag::kb::{open_knowledge_base, save_knowledge_base, KbFileError};
use pgxrag::manifest::{ManifestSnapshot, TOOL_VERSION};
use pgxrag::server::{spawn_server, AppState, ServedIndex};
use pgxrag::store::AnnotationStore;
use pgxrag_core::eval::report::{QuizSummary, WilcoxonSpec};
use pgxrag_core::eval::{self, wilcoxon_signed_rank, Alternative, Dimension};
use pgxrag_core::generate::GenerationBackend;
use pgxrag_core::pipeline::{KnowledgeBase, Pipeline, PipelineError};
use pgxrag_core::{Embedder, GuidelineLexicon, Phase, PromptSet, Source};
use serde::Deserialize;

/// Error carrying the machine-readable class printed on stderr.
#[derive(Debug)]
pub struct Classified {
    pub class: &'static str,
    pub message: String,
}

impl fmt::Display for Classified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Classified {}

fn fail(class: &'static str, message: impl Into<String>) -> anyhow::Error {
    Classified {
        class,
        message: message.into(),
    }
    .into()
}

fn load_err(e: LoadError) -> anyhow::Error {
    fail(e.class(), e.to_string())
}

fn kb_err(e: KbFileError) -> anyhow::Error {
    fail(e.class(), e.to_string())
}

fn pipeline_err(e: PipelineError) -> anyhow::Error {
    fail(pipeline_error_class(&e), e.to_string())
}

/// `ERROR <Class>: <message>`
pub fn error_line(e: &anyhow::Error) -> String {
    match e.downcast_ref::<Classified>() {
        Some(c) => format!("ERROR {}: {}", c.class, c.message),
        None => format!("ERROR Failure: {e:#}"),
    }
}

#[derive(Parser)]
#[command(name = "pgxrag", version, about = "Retrieval-augmented answers over pharmacogenomic guidelines")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Guideline lexicon JSON (defaults to the built-in 26-guideline table).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Directory holding the four prompt template files (defaults to the built-in set).
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk, embed and persist a corpus.
    Ingest(IngestArgs),
    /// Answer one question and print the retrieval trace.
    Ask(AskArgs),
    #[command(subcommand)]
    Eval(EvalCommand),
    #[command(subcommand)]
    Quiz(QuizCommand),
    /// Start the HTTP API.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Answer every query of a dataset.
    Run(EvalRunArgs),
    /// Aggregate annotations into a comparison report.
    Metrics(MetricsArgs),
    /// Paired Wilcoxon signed-rank test between two groups.
    Wilcoxon(WilcoxonArgs),
    /// Check a dataset against the guideline-by-ten structure.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum QuizCommand {
    /// Score an answer sheet against a quiz key.
    Score(QuizScoreArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus JSONL file or a directory of them.
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated sources to keep: CPIC, PharmGKB.
    #[arg(long, default_value = "CPIC,PharmGKB")]
    sources: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    max_chunk_tokens: Option<usize>,
    #[arg(long, value_enum)]
    embedder: Option<EmbeddingKind>,
}

#[derive(Args, Clone)]
struct BackendArgs {
    #[arg(long, value_enum)]
    backend: Option<GenerationKind>,
    /// Cassette file for `--backend cassette`.
    #[arg(long)]
    cassette: Option<PathBuf>,
}

#[derive(Args)]
struct AskArgs {
    question: String,
    #[arg(long, value_parser = parse_phase_arg)]
    phase: Phase,
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value = "adhoc")]
    query_id: String,
    /// Print the full response as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalRunArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_parser = parse_phase_arg)]
    phase: Phase,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Group label recorded on every response (default `phase<N>`).
    #[arg(long)]
    group: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct MetricsArgs {
    /// Annotation JSONL files; records from all are pooled.
    #[arg(long, required = true, num_args = 1..)]
    annotations: Vec<PathBuf>,
    /// Comma-separated groups in report order.
    #[arg(long)]
    groups: String,
    /// Write the report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Paired test as `a:b:metric:alternative`; repeatable.
    #[arg(long = "wilcoxon")]
    wilcoxon: Vec<String>,
    /// Quiz key used to score `--quiz-answers`.
    #[arg(long)]
    quiz_items: Option<PathBuf>,
    /// Answer sheet as `label=path`; repeatable.
    #[arg(long = "quiz-answers")]
    quiz_answers: Vec<String>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct WilcoxonArgs {
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    alternative: Option<String>,
    /// Annotation JSONL files to pair by query id.
    #[arg(long, num_args = 1..)]
    annotations: Vec<PathBuf>,
    /// A paired-scores file `{metric, a, b, alternative, pairs: [{query_id, a, b}]}`.
    #[arg(long, conflicts_with = "annotations")]
    pairs: Option<PathBuf>,
    #[arg(long, default_value_t = eval::wilcoxon::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct QuizScoreArgs {
    #[arg(long)]
    items: PathBuf,
    #[arg(long)]
    answers: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Index file; repeat to serve a CPIC-only index next to a mixed one.
    #[arg(long, required = true)]
    index: Vec<PathBuf>,
    /// Directory of the annotation log.
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    quiz: Option<PathBuf>,
    /// Directory of `<group>.jsonl` response files.
    #[arg(long)]
    responses: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
}

fn parse_phase_arg(s: &str) -> Result<Phase, String> {
    let digits = s.strip_prefix("phase").unwrap_or(s);
    digits
        .parse()
        .ok()
        .and_then(Phase::from_number)
        .ok_or_else(|| format!("phase must be 1, 2 or 3, got {s:?}"))
}

struct AppContext {
    config: Config,
    lexicon: GuidelineLexicon,
    prompts: PromptSet,
}

impl Cli {
    fn context(&self) -> Result<AppContext> {
        let config = Config::load_or_default(self.config.as_deref()).map_err(|e| fail(e.class(), e.to_string()))?;
        let lexicon = match &self.lexicon {
            Some(p) => files::load_lexicon(p).map_err(load_err)?,
            None => GuidelineLexicon::cpic26(),
        };
        let prompts = match &self.templates {
            Some(dir) => {
                let read = |name: &str| files::read_text(&dir.join(name)).map_err(load_err);
                PromptSet::from_texts(
                    &read("layer1_system.txt")?,
                    &read("layer1_user.txt")?,
                    &read("layer2_system.txt")?,
                    &read("layer2_user.txt")?,
                )
                .map_err(|e| fail("InvalidTemplate", e.to_string()))?
            }
            None => PromptSet::builtin(),
        };
        Ok(AppContext { config, lexicon, prompts })
    }
}

impl AppContext {
    fn generator(&self, b: &BackendArgs) -> Result<Box<dyn GenerationBackend + Send + Sync>> {
        self.config
            .generator(b.backend, b.cassette.as_deref(), &self.lexicon)
            .map_err(|e| fail(e.class(), e.to_string()))
    }

    fn open_index(&self, path: &Path) -> Result<ServedIndex> {
        let kb = open_knowledge_base(path).map_err(kb_err)?;
        let embedder = self
            .config
            .embedder_for_tag(kb.index().backend_tag())
            .map_err(|e| fail(e.class(), e.to_string()))?;
        Ok(ServedIndex { kb, embedder })
    }
}

fn pipeline<'a>(
    ctx: &'a AppContext,
    served: &'a ServedIndex,
    generator: &'a (dyn GenerationBackend + Send + Sync),
) -> Pipeline<'a> {
    Pipeline {
        kb: &served.kb,
        embedder: served.embedder.as_ref() as &dyn Embedder,
        generator,
        prompts: &ctx.prompts,
        lexicon: &ctx.lexicon,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = cli.context()?;
    match cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Ask(a) => ask(&ctx, a),
        Command::Eval(EvalCommand::Run(a)) => eval_run(&ctx, a),
        Command::Eval(EvalCommand::Metrics(a)) => metrics(a),
        Command::Eval(EvalCommand::Wilcoxon(a)) => wilcoxon(a),
        Command::Eval(EvalCommand::Validate(a)) => validate(&ctx, a),
        Command::Quiz(QuizCommand::Score(a)) => quiz_score(a),
        Command::Serve(a) => serve(ctx, a),
    }
}

fn parse_sources(s: &str) -> Result<BTreeSet<Source>> {
    let sources: BTreeSet<Source> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| Source::parse(x).ok_or_else(|| fail("InvalidArgument", format!("unknown source {x:?}"))))
        .collect::<Result<_>>()?;
    if sources.is_empty() {
        bail!(fail("InvalidArgument", "--sources is empty"));
    }
    Ok(sources)
}

fn ingest(ctx: &AppContext, a: IngestArgs) -> Result<()> {
    let sources = parse_sources(&a.sources)?;
    let corpus = files::load_corpus(&a.corpus, &sources).map_err(load_err)?;
    if corpus.is_empty() {
        bail!(fail("EmptyCorpus", format!("no {} documents in {}", a.sources, a.corpus.display())));
    }
    let max_tokens = a.max_chunk_tokens.unwrap_or(ctx.config.chunking.max_chunk_tokens);
    let embedder = ctx.config.embedder(a.embedder);
    let kb = KnowledgeBase::build(&corpus, max_tokens, embedder.as_ref())
        .map_err(|e| fail("IndexBuildFailure", e.to_string()))?;
    save_knowledge_base(&kb, &a.out).map_err(kb_err)?;
    let oversized = kb.chunks().filter(|c| c.chunk.token_estimate > max_tokens).count();
    println!(
        "indexed {} chunks from {} documents ({} excluded by source, {} oversized) with {} -> {}",
        kb.index().len(),
        corpus.len(),
        corpus.excluded(),
        oversized,
        kb.index().backend_tag(),
        a.out.display()
    );
    Ok(())
}

fn ask(ctx: &AppContext, a: AskArgs) -> Result<()> {
    let served = ctx.open_index(&a.index)?;
    let generator = ctx.generator(&a.backend)?;
    let config = ctx.config.phase_config(a.phase);
    let response = pipeline(ctx, &served, generator.as_ref())
        .answer_query(&a.query_id, &a.question, &config)
        .map_err(pipeline_err)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&response)?);
        return Ok(());
    }
    println!("{}", response.answer);
    println!();
    println!("-- trace ({}, {}, {})", response.phase, response.embedder_tag, response.backend_tag);
    for q in &response.supplementary_queries {
        println!("sub-query: {q}");
    }
    for (hit, s) in response.hits.iter().zip(&response.summaries) {
        println!("[{:.4}] {} ({})", hit.score, hit.chunk_id, s.source);
        println!("    {}", s.text.replace('\n', "\n    "));
    }
    println!("context tokens: {}", response.context_tokens);
    println!("trace: {}", response.trace_hash);
    Ok(())
}

fn eval_run(ctx: &AppContext, a: EvalRunArgs) -> Result<()> {
    let dataset = files::load_dataset(&a.dataset).map_err(load_err)?;
    let served = ctx.open_index(&a.index)?;
    let generator = ctx.generator(&a.backend)?;
    let config = ctx.config.phase_config(a.phase);
    let corpus_digest = batch::corpus_digest(&a.index).map_err(|e| fail("IoFailure", e.to_string()))?;
    let snapshot = ManifestSnapshot {
        tool_version: TOOL_VERSION.into(),
        group: a.group.clone().unwrap_or_else(|| a.phase.to_string()),
        phase_config: config.clone(),
        embedder_tag: served.embedder.tag(),
        backend_tag: generator.tag(),
        template_digest: ctx.prompts.digest(),
        corpus_digest,
        dataset_digest: batch::dataset_digest(&dataset),
    };
    let run = batch::run_batch(&pipeline(ctx, &served, generator.as_ref()), &dataset, &config, snapshot)
        .map_err(|e| fail(pipeline_error_class(&e.source), e.to_string()))?;
    batch::write_batch(&a.out, &run).map_err(|e| fail("IoFailure", format!("{}: {e}", a.out.display())))?;
    println!(
        "wrote {} responses to {} (manifest {})",
        run.records.len(),
        a.out.display(),
        run.manifest.manifest_digest
    );
    Ok(())
}

fn load_annotation_files(paths: &[PathBuf]) -> Result<Vec<eval::AnnotationRecord>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(files::load_annotations(p).map_err(load_err)?);
    }
    Ok(all)
}

fn parse_metric(s: &str) -> Result<Dimension> {
    Dimension::parse(s).ok_or_else(|| fail("InvalidArgument", format!("unknown metric {s:?}")))
}

fn parse_alternative(s: &str) -> Result<Alternative> {
    Alternative::parse(s).ok_or_else(|| fail("InvalidArgument", format!("unknown alternative {s:?}")))
}

fn parse_spec(s: &str) -> Result<WilcoxonSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, metric, alternative] = parts[..] else {
        bail!(fail("InvalidArgument", format!("--wilcoxon expects a:b:metric:alternative, got {s:?}")));
    };
    Ok(WilcoxonSpec {
        a: a.into(),
        b: b.into(),
        metric: parse_metric(metric)?,
        alternative: parse_alternative(alternative)?,
    })
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let records = load_annotation_files(&a.annotations)?;
    let groups: Vec<&str> = a.groups.split(',').map(str::trim).filter(|g| !g.is_empty()).collect();
    let specs = a.wilcoxon.iter().map(|s| parse_spec(s)).collect::<Result<Vec<_>>>()?;
    let mut quiz = Vec::new();
    if !a.quiz_answers.is_empty() {
        let items_path = a
            .quiz_items
            .as_ref()
            .ok_or_else(|| fail("InvalidArgument", "--quiz-answers needs --quiz-items"))?;
        let items = files::load_quiz(items_path).map_err(load_err)?;
        for qa in &a.quiz_answers {
            let (label, path) = qa
                .split_once('=')
                .ok_or_else(|| fail("InvalidArgument", format!("--quiz-answers expects label=path, got {qa:?}")))?;
            let sheet = files::load_answers(Path::new(path)).map_err(load_err)?;
            let result = eval::score_quiz(&sheet.0, &items).map_err(|e| fail("InvalidQuiz", e.to_string()))?;
            quiz.push(QuizSummary::new(label, &result));
        }
    }
    let report = eval::report::build_comparison_at(
        &groups,
        &records,
        &quiz,
        &specs,
        a.alpha.unwrap_or(eval::wilcoxon::DEFAULT_ALPHA),
    )
    .map_err(|e| fail("ReportFailure", e.to_string()))?;
    print!("{}", report.render_text());
    if let Some(p) = &a.report {
        files::write_json_pretty(p, &report).map_err(|e| fail("IoFailure", format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct PairsFile {
    metric: String,
    a: String,
    b: String,
    alternative: String,
    pairs: Vec<Pair>,
}

#[derive(Deserialize)]
struct Pair {
    #[allow(dead_code)]
    query_id: String,
    a: f64,
    b: f64,
}

fn wilcoxon(a: WilcoxonArgs) -> Result<()> {
    let (spec, pairs): (WilcoxonSpec, Vec<(f64, f64)>) = if let Some(path) = &a.pairs {
        let f: PairsFile = files::read_json(path).map_err(load_err)?;
        let spec = WilcoxonSpec {
            a: a.a.clone().unwrap_or(f.a),
            b: a.b.clone().unwrap_or(f.b),
            metric: parse_metric(a.metric.as_deref().unwrap_or(&f.metric))?,
            alternative: parse_alternative(a.alternative.as_deref().unwrap_or(&f.alternative))?,
        };
        (spec, f.pairs.iter().map(|p| (p.a, p.b)).collect())
    } else {
        if a.annotations.is_empty() {
            bail!(fail("InvalidArgument", "give --annotations or --pairs"));
        }
        let need = |v: &Option<String>, flag: &str| {
            v.clone().ok_or_else(|| fail("InvalidArgument", format!("--{flag} is required with --annotations")))
        };
        let spec = WilcoxonSpec {
            a: need(&a.a, "a")?,
            b: need(&a.b, "b")?,
            metric: parse_metric(&need(&a.metric, "metric")?)?,
            alternative: parse_alternative(&need(&a.alternative, "alternative")?)?,
        };
        let records = eval::metrics::latest_per_key(load_annotation_files(&a.annotations)?);
        let pairs = eval::report::paired_scores(&records, &spec.a, &spec.b, spec.metric);
        if pairs.is_empty() {
            bail!(fail("NoPairs", format!("no query scored in both {} and {}", spec.a, spec.b)));
        }
        (spec, pairs.into_iter().map(|(_, x, y)| (x, y)).collect())
    };
    let result = wilcoxon_signed_rank(&pairs, spec.alternative).map_err(|e| fail("WilcoxonFailure", e.to_string()))?;
    let significant = result.significant(a.alpha);
    if a.json {
        let out = eval::report::WilcoxonComparison {
            spec,
            result,
            significant,
        };
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!(
            "{} vs {} ({}, {}): W = {}, n = {} ({} non-zero), p = {:.4}, {} at alpha {}",
            spec.a,
            spec.b,
            spec.metric,
            spec.alternative.as_str(),
            result.w_statistic,
            result.n_input,
            result.n_effective,
            result.p_value,
            if significant { "significant" } else { "not significant" },
            a.alpha
        );
    }
    Ok(())
}

fn validate(ctx: &AppContext, a: ValidateArgs) -> Result<()> {
    let records = files::load_dataset(&a.dataset).map_err(load_err)?;
    let report = eval::validate_dataset(&records, &ctx.lexicon);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{} queries across {} guidelines", report.total, report.counts.len());
    }
    if !report.conformant {
        bail!(fail(
            "DatasetViolation",
            format!("violating guidelines: {}", report.violating_guidelines().join(", "))
        ));
    }
    if !a.json {
        println!("conformant");
    }
    Ok(())
}

fn quiz_score(a: QuizScoreArgs) -> Result<()> {
    let items = files::load_quiz(&a.items).map_err(load_err)?;
    let sheet = files::load_answers(&a.answers).map_err(load_err)?;
    let result = eval::score_quiz(&sheet.0, &items).map_err(|e| fail("InvalidQuiz", e.to_string()))?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        println!("{}/{} = {:.0}%", result.correct, result.total, result.accuracy * 100.0);
    }
    Ok(())
}

fn serve(ctx: AppContext, a: ServeArgs) -> Result<()> {
    let indexes = a.index.iter().map(|p| ctx.open_index(p)).collect::<Result<Vec<_>>>()?;
    let generator = ctx.generator(&a.backend)?;
    let store = AnnotationStore::open_dir(&a.store).map_err(|e| fail(e.class(), e.to_string()))?;
    let dataset = match &a.dataset {
        Some(p) => files::load_dataset(p).map_err(load_err)?,
        None => Vec::new(),
    };
    let quiz = a.quiz.as_deref().map(files::load_quiz).transpose().map_err(load_err)?;
    let state = Arc::new(AppState {
        indexes,
        generator,
        prompts: ctx.prompts,
        lexicon: ctx.lexicon,
        config: ctx.config,
        store,
        dataset,
        quiz,
        responses_dir: a.responses,
    });
    let handle = spawn_server(Arc::clone(&state), SocketAddr::new(a.host, a.port))
        .with_context(|| format!("binding {}:{}", a.host, a.port))
        .map_err(|e| fail("IoFailure", format!("{e:#}")))?;
    eprintln!("listening on http://{}", handle.addr);
    handle.wait().map_err(|e| fail("IoFailure", e.to_string()))?;
    drop(state);
    Ok(())
}
