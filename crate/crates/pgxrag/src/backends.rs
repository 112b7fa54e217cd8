//! Remote (OpenAI-compatible HTTP) embedding and generation clients, and the
//! record/replay cassette generation backend.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use pgxrag_core::embed::EmbedError;
use pgxrag_core::generate::{GenerationBackend, GenerationError, GenerationRequest};
use pgxrag_core::Embedder;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::files::{self, LoadError};

pub const API_KEY_ENV: &str = "PGXRAG_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteSettings {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

fn client(settings: &RemoteSettings) -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(settings.timeout)
        .build()
        .expect("HTTP client construction")
}

fn post_json(
    client: &reqwest::blocking::Client,
    settings: &RemoteSettings,
    path: &str,
    body: &Value,
) -> Result<Value, String> {
    let url = format!("{}/{}", settings.endpoint.trim_end_matches('/'), path);
    let mut req = client.post(&url).json(body);
    if let Some(key) = &settings.api_key {
        req = req.bearer_auth(key);
    }
    let resp = req.send().map_err(|e| format!("{url}: {e}"))?;
    let status = resp.status();
    if !status.is_success() {
        return Err(format!("{url}: HTTP {status}"));
    }
    resp.json().map_err(|e| format!("{url}: {e}"))
}

pub struct RemoteEmbedder {
    settings: RemoteSettings,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    pub const TAG_PREFIX: &'static str = "remote:";

    pub fn new(settings: RemoteSettings, dim: usize) -> Self {
        RemoteEmbedder {
            client: client(&settings),
            settings,
            dim,
        }
    }

    /// Splits a `remote:<model>:d<dim>` tag.
    pub fn parse_tag(tag: &str) -> Option<(&str, usize)> {
        let rest = tag.strip_prefix(Self::TAG_PREFIX)?;
        let (model, dim) = rest.rsplit_once(":d")?;
        Some((model, dim.parse().ok()?))
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tag(&self) -> String {
        format!("{}{}:d{}", Self::TAG_PREFIX, self.settings.model, self.dim)
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let body = json!({ "model": self.settings.model, "input": text });
        let v = post_json(&self.client, &self.settings, "embeddings", &body).map_err(EmbedError::BackendUnavailable)?;
        let values = v["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| EmbedError::BackendUnavailable("response has no data[0].embedding".into()))?;
        values
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| EmbedError::BackendUnavailable("non-numeric embedding value".into())))
            .collect()
    }
}

pub struct RemoteGenerator {
    settings: RemoteSettings,
    client: reqwest::blocking::Client,
}

impl RemoteGenerator {
    pub fn new(settings: RemoteSettings) -> Self {
        RemoteGenerator {
            client: client(&settings),
            settings,
        }
    }
}

impl GenerationBackend for RemoteGenerator {
    fn tag(&self) -> String {
        format!("remote:{}", self.settings.model)
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, GenerationError> {
        let body = json!({
            "model": self.settings.model,
            "temperature": request.temperature,
            "messages": [
                { "role": "system", "content": request.system },
                { "role": "user", "content": request.user },
            ],
        });
        let v = post_json(&self.client, &self.settings, "chat/completions", &body)
            .map_err(GenerationError::BackendUnavailable)?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| GenerationError::InvalidResponse("no choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CassetteEntry {
    pub request_hash: String,
    pub response_text: String,
}

pub fn load_cassette(path: &Path) -> Result<BTreeMap<String, String>, LoadError> {
    let mut out = BTreeMap::new();
    for (line, e) in files::read_jsonl::<CassetteEntry>(path)? {
        if let Some(prev) = out.insert(e.request_hash.clone(), e.response_text.clone()) {
            if prev != e.response_text {
                return Err(LoadError::MalformedRecord {
                    path: path.to_path_buf(),
                    line,
                    message: format!("conflicting recordings for {}", e.request_hash),
                });
            }
        }
    }
    Ok(out)
}

/// Replays recorded responses keyed by [`GenerationRequest::fingerprint`].
/// In record mode, misses are forwarded to an inner backend and appended to
/// the cassette file.
pub struct CassetteBackend {
    model: String,
    entries: Mutex<BTreeMap<String, String>>,
    recorder: Option<(Box<dyn GenerationBackend + Send + Sync>, PathBuf)>,
}

impl CassetteBackend {
    pub fn replay(model: impl Into<String>, entries: BTreeMap<String, String>) -> Self {
        CassetteBackend {
            model: model.into(),
            entries: Mutex::new(entries),
            recorder: None,
        }
    }

    pub fn open(model: impl Into<String>, path: &Path) -> Result<Self, LoadError> {
        Ok(Self::replay(model, load_cassette(path)?))
    }

    /// Records into `path` (created if missing), replaying what it already holds.
    pub fn record(
        model: impl Into<String>,
        path: &Path,
        inner: Box<dyn GenerationBackend + Send + Sync>,
    ) -> Result<Self, LoadError> {
        let entries = match load_cassette(path) {
            Ok(e) => e,
            Err(LoadError::MissingFile { .. }) => BTreeMap::new(),
            Err(e) => return Err(e),
        };
        Ok(CassetteBackend {
            model: model.into(),
            entries: Mutex::new(entries),
            recorder: Some((inner, path.to_path_buf())),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl GenerationBackend for CassetteBackend {
    fn tag(&self) -> String {
        format!("cassette:{}", self.model)
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, GenerationError> {
        let hash = request.fingerprint(&self.model);
        if let Some(text) = self.entries.lock().unwrap().get(&hash) {
            return Ok(text.clone());
        }
        let Some((inner, path)) = &self.recorder else {
            return Err(GenerationError::MissingRecording(hash));
        };
        let text = inner.generate(request)?;
        let entry = CassetteEntry {
            request_hash: hash.clone(),
            response_text: text.clone(),
        };
        let mut line = serde_json::to_string(&entry).expect("serializable");
        line.push('\n');
        let mut entries = self.entries.lock().unwrap();
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .map_err(|e| GenerationError::BackendUnavailable(format!("cassette write: {e}")))?;
        entries.insert(hash, text.clone());
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pgxrag_core::generate::{Task, TEMPERATURE};

    fn request(user: &str) -> GenerationRequest<'static> {
        GenerationRequest {
            system: "sys".into(),
            user: user.into(),
            temperature: TEMPERATURE,
            task: Task::Summarize {
                query: "q",
                source: "s",
                content: "c",
            },
        }
    }

    struct Echo;
    impl GenerationBackend for Echo {
        fn tag(&self) -> String {
            "echo".into()
        }
        fn generate(&self, r: &GenerationRequest<'_>) -> Result<String, GenerationError> {
            Ok(format!("echo {}", r.user))
        }
    }

    #[test]
    fn replay_miss_is_missing_recording() {
        let c = CassetteBackend::replay("m", BTreeMap::new());
        assert!(matches!(c.generate(&request("u")), Err(GenerationError::MissingRecording(_))));
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let rec = CassetteBackend::record("m", &path, Box::new(Echo)).unwrap();
        assert_eq!(rec.generate(&request("u1")).unwrap(), "echo u1");
        assert_eq!(rec.generate(&request("u1")).unwrap(), "echo u1");
        assert_eq!(rec.len(), 1);
        let replay = CassetteBackend::open("m", &path).unwrap();
        assert_eq!(replay.generate(&request("u1")).unwrap(), "echo u1");
        // a different model name yields different fingerprints
        let other = CassetteBackend::open("m2", &path).unwrap();
        assert!(other.generate(&request("u1")).is_err());
    }

    #[test]
    fn conflicting_entries_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            "{\"request_hash\":\"h\",\"response_text\":\"a\"}\n{\"request_hash\":\"h\",\"response_text\":\"b\"}\n",
        )
        .unwrap();
        assert!(matches!(load_cassette(&path), Err(LoadError::MalformedRecord { line: 2, .. })));
    }

    #[test]
    fn remote_tag_round_trip() {
        let settings = RemoteSettings {
            endpoint: "http://127.0.0.1:9".into(),
            model: "text-embedding-3-small".into(),
            api_key: None,
            timeout: Duration::from_millis(200),
        };
        let e = RemoteEmbedder::new(settings, 1536);
        assert_eq!(e.tag(), "remote:text-embedding-3-small:d1536");
        assert_eq!(RemoteEmbedder::parse_tag(&e.tag()), Some(("text-embedding-3-small", 1536)));
        assert!(RemoteEmbedder::parse_tag("offline-hbow-fnv1a64-d64").is_none());
    }

    #[test]
    fn unreachable_endpoint_is_backend_unavailable() {
        let settings = RemoteSettings {
            endpoint: "http://127.0.0.1:9".into(),
            model: "gpt-4o-mini".into(),
            api_key: None,
            timeout: Duration::from_millis(500),
        };
        let g = RemoteGenerator::new(settings.clone());
        assert!(matches!(g.generate(&request("u")), Err(GenerationError::BackendUnavailable(_))));
        let e = RemoteEmbedder::new(settings, 8);
        assert!(matches!(e.embed("text"), Err(EmbedError::BackendUnavailable(_))));
    }
}
