//! JSON-over-HTTP service backing the review console.
//!
//! Every route lives under `/api`. Errors are `{"error": <Class>, "message": ..}`
//! with 400 for schema violations, 404 for unknown ids or groups, 409 for a
//! reused submission token and 503 when a model backend cannot be reached.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pgxrag_core::eval::{build_comparison, AnnotationRecord, QueryRecord, QuizItem, ResponseRef};
use pgxrag_core::eval::report::ReportError;
use pgxrag_core::eval::quiz::QuizError;
use pgxrag_core::generate::GenerationBackend;
use pgxrag_core::pipeline::{KnowledgeBase, Pipeline, PipelineError};
use pgxrag_core::{Embedder, GuidelineLexicon, Phase, PromptSet};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use tokio::sync::oneshot;

use crate::batch::pipeline_error_class;
use crate::config::Config;
use crate::files::{self, AnswerSheet};
use crate::manifest::{now_rfc3339, TOOL_VERSION};
use crate::store::{AnnotationStore, StoreError};

/// A loaded knowledge base with the query embedder matching its index.
pub struct ServedIndex {
    pub kb: KnowledgeBase,
    pub embedder: Box<dyn Embedder + Send + Sync>,
}

pub struct AppState {
    /// Tried in order; a query uses the first index whose sources the phase allows.
    pub indexes: Vec<ServedIndex>,
    pub generator: Box<dyn GenerationBackend + Send + Sync>,
    pub prompts: PromptSet,
    pub lexicon: GuidelineLexicon,
    pub config: Config,
    pub store: AnnotationStore,
    pub dataset: Vec<QueryRecord>,
    pub quiz: Option<Vec<QuizItem>>,
    pub responses_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    class: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, class: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            class,
            message: message.into(),
        }
    }

    fn schema(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "SchemaViolation", message)
    }

    fn not_found(class: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, class, message)
    }

    fn internal(class: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, class, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.class, "message": self.message }))).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let class = pipeline_error_class(&e);
        let status = match class {
            "BackendUnavailable" | "MissingRecording" => StatusCode::SERVICE_UNAVAILABLE,
            "InvalidConfig" | "ConfigMismatch" => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, class, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::Invalid(_) => StatusCode::BAD_REQUEST,
            StoreError::DuplicateToken(_) => StatusCode::CONFLICT,
            StoreError::Io(_) | StoreError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.class(), e.to_string())
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok(value: impl serde::Serialize) -> ApiResult {
    Ok(Json(value).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/query", post(query))
        .route("/api/dataset", get(dataset))
        .route("/api/responses", get(responses))
        .route("/api/annotations", get(list_annotations).post(post_annotation))
        .route("/api/metrics", get(metrics))
        .route("/api/quiz", get(quiz))
        .route("/api/quiz/answers", post(quiz_answers))
        .fallback(|| async { ApiError::not_found("NotFound", "no such route") })
        .with_state(state)
}

async fn health(State(s): State<Arc<AppState>>) -> ApiResult {
    ok(json!({
        "status": "ok",
        "tool_version": TOOL_VERSION,
        "backend_tag": s.generator.tag(),
        "indexes": s.indexes.iter().map(|i| json!({
            "embedder_tag": i.kb.index().backend_tag(),
            "chunks": i.kb.index().len(),
            "sources": i.kb.sources(),
        })).collect::<Vec<_>>(),
        "annotations": s.store.all().len(),
    }))
}

fn parse_body(body: &Bytes) -> Result<Map<String, Value>, ApiError> {
    match serde_json::from_slice(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::schema("request body must be a JSON object")),
        Err(e) => Err(ApiError::schema(format!("invalid JSON: {e}"))),
    }
}

fn reject_unknown(body: &Map<String, Value>, allowed: &[&str]) -> Result<(), ApiError> {
    match body.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ApiError::schema(format!("unknown field {k:?}"))),
        None => Ok(()),
    }
}

fn req_str(body: &Map<String, Value>, key: &str) -> Result<String, ApiError> {
    match body.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(ApiError::schema(format!("{key} must not be empty"))),
        Some(_) => Err(ApiError::schema(format!("{key} must be a string"))),
        None => Err(ApiError::schema(format!("missing field {key}"))),
    }
}

fn opt_str(body: &Map<String, Value>, key: &str) -> Result<Option<String>, ApiError> {
    match body.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => req_str(body, key).map(Some),
    }
}

/// Accepts `1`, `"1"` or `"phase1"`.
pub fn parse_phase(v: &Value) -> Option<Phase> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|n| u8::try_from(n).ok()).and_then(Phase::from_number),
        Value::String(s) => {
            let digits = s.strip_prefix("phase").unwrap_or(s);
            digits.parse().ok().and_then(Phase::from_number)
        }
        _ => None,
    }
}

async fn query(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let body = parse_body(&body)?;
    reject_unknown(&body, &["text", "phase", "query_id"])?;
    let text = req_str(&body, "text")?;
    let phase = body
        .get("phase")
        .ok_or_else(|| ApiError::schema("missing field phase"))
        .and_then(|v| parse_phase(v).ok_or_else(|| ApiError::schema(format!("phase must be 1, 2 or 3, got {v}"))))?;
    let query_id = opt_str(&body, "query_id")?.unwrap_or_else(|| "adhoc".into());
    let state = Arc::clone(&s);
    let response = tokio::task::spawn_blocking(move || {
        let config = state.config.phase_config(phase);
        let served = state
            .indexes
            .iter()
            .find(|i| i.kb.sources().is_subset(&config.sources))
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "ConfigMismatch",
                    format!("no served index holds only sources allowed in {phase}"),
                )
            })?;
        let pipeline = Pipeline {
            kb: &served.kb,
            embedder: served.embedder.as_ref(),
            generator: state.generator.as_ref(),
            prompts: &state.prompts,
            lexicon: &state.lexicon,
        };
        pipeline.answer_query(&query_id, &text, &config).map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError::internal("PipelineFailure", e.to_string()))??;
    ok(response)
}

async fn dataset(State(s): State<Arc<AppState>>) -> ApiResult {
    ok(&s.dataset)
}

#[derive(Deserialize)]
struct GroupParam {
    group: Option<String>,
}

fn valid_group_name(g: &str) -> bool {
    !g.is_empty()
        && !g.starts_with('.')
        && g.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

async fn responses(State(s): State<Arc<AppState>>, Query(p): Query<GroupParam>) -> ApiResult {
    let dir = s
        .responses_dir
        .as_ref()
        .ok_or_else(|| ApiError::not_found("UnknownGroup", "the server was started without a responses directory"))?;
    let Some(group) = p.group else {
        let mut groups: Vec<String> = std::fs::read_dir(dir)
            .map_err(|e| ApiError::internal("IoFailure", e.to_string()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".jsonl").map(str::to_string))
            .filter(|g| valid_group_name(g))
            .collect();
        groups.sort();
        return ok(json!({ "groups": groups }));
    };
    if !valid_group_name(&group) {
        return Err(ApiError::schema(format!("invalid group name {group:?}")));
    }
    let path = dir.join(format!("{group}.jsonl"));
    match files::read_jsonl::<Value>(&path) {
        Ok(lines) => ok(lines.into_iter().map(|(_, v)| v).collect::<Vec<_>>()),
        Err(files::LoadError::MissingFile { .. }) => Err(ApiError::not_found("UnknownGroup", format!("no responses for group {group:?}"))),
        Err(e) => Err(ApiError::internal(e.class(), e.to_string())),
    }
}

async fn list_annotations(State(s): State<Arc<AppState>>, Query(p): Query<GroupParam>) -> ApiResult {
    let records: Vec<AnnotationRecord> = s
        .store
        .latest()
        .into_iter()
        .filter(|r| p.group.as_deref().is_none_or(|g| r.response_ref.group == g))
        .collect();
    ok(records)
}

fn likert(v: Option<&Value>, key: &str) -> Result<u8, ApiError> {
    let v = v.ok_or_else(|| ApiError::schema(format!("missing score {key}")))?;
    v.as_u64()
        .and_then(|n| u8::try_from(n).ok())
        .ok_or_else(|| ApiError::schema(format!("{key} must be an integer from 1 to 5, got {v}")))
}

fn count(body: &Map<String, Value>, key: &str) -> Result<Option<u32>, ApiError> {
    match body.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .map(Some)
            .ok_or_else(|| ApiError::schema(format!("{key} must be a non-negative integer or null, got {v}"))),
    }
}

/// Builds a record from the loosely shaped annotation body. `response_ref`
/// may be an object `{query_id, group}` or a bare query id with a top-level
/// `group`; scores may be nested under `scores` or given at the top level.
pub fn parse_annotation(body: &Map<String, Value>) -> Result<AnnotationRecord, ApiError> {
    const SCORES: [&str; 4] = ["accuracy", "relevance", "completeness", "clarity"];
    reject_unknown(
        body,
        &[
            "response_ref", "query_id", "group", "scores", "accuracy", "relevance", "completeness", "clarity",
            "tp", "fp", "fn", "annotator_id", "timestamp", "submission_token",
        ],
    )?;
    let response_ref = match body.get("response_ref") {
        Some(Value::Object(m)) => {
            reject_unknown(m, &["query_id", "group"])?;
            let group = match m.get("group") {
                Some(_) => req_str(m, "group")?,
                None => req_str(body, "group")?,
            };
            ResponseRef {
                query_id: req_str(m, "query_id")?,
                group,
            }
        }
        Some(Value::String(_)) => ResponseRef {
            query_id: req_str(body, "response_ref")?,
            group: req_str(body, "group")?,
        },
        Some(_) => return Err(ApiError::schema("response_ref must be an object or a query id")),
        None => ResponseRef {
            query_id: req_str(body, "query_id")?,
            group: req_str(body, "group")?,
        },
    };
    let scores = match body.get("scores") {
        Some(Value::Object(m)) => {
            reject_unknown(m, &SCORES)?;
            if let Some(k) = SCORES.iter().find(|k| body.contains_key(**k)) {
                return Err(ApiError::schema(format!("{k} given both inside and outside scores")));
            }
            m
        }
        Some(_) => return Err(ApiError::schema("scores must be an object")),
        None => body,
    };
    let record = AnnotationRecord {
        response_ref,
        accuracy: likert(scores.get("accuracy"), "accuracy")?,
        relevance: likert(scores.get("relevance"), "relevance")?,
        completeness: likert(scores.get("completeness"), "completeness")?,
        clarity: likert(scores.get("clarity"), "clarity")?,
        true_pos: count(body, "tp")?,
        false_pos: count(body, "fp")?,
        false_neg: count(body, "fn")?,
        annotator_id: req_str(body, "annotator_id")?,
        timestamp: opt_str(body, "timestamp")?.unwrap_or_else(now_rfc3339),
        submission_token: opt_str(body, "submission_token")?,
    };
    record.validate().map_err(|e| ApiError::schema(e.to_string()))?;
    Ok(record)
}

async fn post_annotation(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let record = parse_annotation(&parse_body(&body)?)?;
    let qid = &record.response_ref.query_id;
    if !s.dataset.is_empty() && !s.dataset.iter().any(|q| &q.query_id == qid) {
        return Err(ApiError::not_found("UnknownQuery", format!("unknown query id {qid:?}")));
    }
    let state = Arc::clone(&s);
    // the fsync blocks, so keep it off the async workers
    let stored = tokio::task::spawn_blocking(move || state.store.append(record))
        .await
        .map_err(|e| ApiError::internal("IoFailure", e.to_string()))??;
    ok(stored)
}

#[derive(Deserialize)]
struct MetricsParam {
    groups: Option<String>,
}

async fn metrics(State(s): State<Arc<AppState>>, Query(p): Query<MetricsParam>) -> ApiResult {
    let groups: Vec<String> = match p.groups.as_deref().map(str::trim) {
        Some(g) if !g.is_empty() => g.split(',').map(|x| x.trim().to_string()).collect(),
        _ => s.store.groups().into_iter().collect(),
    };
    let names: Vec<&str> = groups.iter().map(String::as_str).collect();
    match build_comparison(&names, &s.store.all(), &[], &[]) {
        Ok(report) => ok(report),
        Err(ReportError::UnknownGroup(g)) => Err(ApiError::not_found("UnknownGroup", format!("no annotations for group {g:?}"))),
        Err(e) => Err(ApiError::schema(e.to_string())),
    }
}

fn quiz_key(s: &AppState) -> Result<&[QuizItem], ApiError> {
    s.quiz
        .as_deref()
        .ok_or_else(|| ApiError::not_found("NoQuiz", "the server was started without a quiz"))
}

async fn quiz(State(s): State<Arc<AppState>>) -> ApiResult {
    let items: Vec<Value> = quiz_key(&s)?
        .iter()
        .map(|q| json!({ "item_id": q.item_id, "stem": q.stem, "choices": q.choices }))
        .collect();
    ok(items)
}

async fn quiz_answers(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let key = quiz_key(&s)?;
    let sheet: AnswerSheet =
        serde_json::from_slice(&body).map_err(|e| ApiError::schema(format!("answers must map item ids to choice indices: {e}")))?;
    match pgxrag_core::eval::score_quiz(&sheet.0, key) {
        Ok(result) => ok(result),
        Err(e @ QuizError::UnknownItem(_)) => Err(ApiError::not_found("UnknownItem", e.to_string())),
        Err(e) => Err(ApiError::schema(e.to_string())),
    }
}

/// A server running on its own runtime thread.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    /// Stops accepting connections and waits for in-flight requests.
    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop()
    }

    /// Blocks until the server exits on its own (it only does on error).
    pub fn wait(mut self) -> std::io::Result<()> {
        self.join()
    }

    fn stop(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.join()
    }

    fn join(&mut self) -> std::io::Result<()> {
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

/// Binds `addr` and serves on a background thread. The caller keeps its own
/// reference to `state`, so blocking HTTP clients inside it are never dropped
/// on a runtime thread.
pub fn spawn_server(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(state);
    let thread = std::thread::Builder::new().name("pgxrag-http".into()).spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener)?;
            axum::serve(listener, app)
                .with_graceful_shutdown(async move {
                    let _ = rx.await;
                })
                .await
        })
    })?;
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
