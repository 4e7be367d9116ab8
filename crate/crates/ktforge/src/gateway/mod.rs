//! Chat-completion gateway with four interchangeable backends: live HTTP,
//! replay from recorded fixtures, record (wrapping another backend), and a
//! scripted mock. Replay keys on a canonical request digest, which makes
//! every pipeline run over fixtures byte-for-byte deterministic.

mod live;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::model::digest_text;

pub use live::{LiveBackend, LiveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, temperature: f64) -> Self {
        ChatRequest { model: model.into(), messages: Vec::new(), temperature }
    }

    pub fn system(mut self, content: impl Into<String>) -> Self {
        self.messages.push(Message { role: Role::System, content: content.into() });
        self
    }

    pub fn user(mut self, content: impl Into<String>) -> Self {
        self.messages.push(Message { role: Role::User, content: content.into() });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub usage: Option<TokenUsage>,
    pub latency_ms: u64,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { message: String, attempts: u32 },
    #[error("http status {status} after {attempts} attempts: {body_excerpt}")]
    HttpStatus { status: u16, body_excerpt: String, attempts: u32 },
    #[error("malformed response body: {0}")]
    MalformedBody(String),
    #[error("no recorded fixture for request digest {digest}")]
    MissingFixture { digest: String },
    #[error("mock script exhausted")]
    ScriptExhausted,
    #[error("fixture io error at {path}: {message}")]
    FixtureIo { path: PathBuf, message: String },
}

/// Uniform chat-completion interface. Implementations must tolerate
/// concurrent `complete` calls.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

/// Canonical serialization of a request: fixed field order, length-prefixed
/// message content so content bytes are never reinterpreted or trimmed.
pub fn canonical_request(request: &ChatRequest) -> String {
    let mut out = String::new();
    out.push_str("model=");
    out.push_str(request.model.trim());
    out.push('\n');
    out.push_str("temperature=");
    out.push_str(&format!("{:?}", request.temperature));
    out.push('\n');
    out.push_str(&format!("messages={}\n", request.messages.len()));
    for m in &request.messages {
        out.push_str(&format!("role={}\ncontent:{}\n", m.role.as_str(), m.content.len()));
        out.push_str(&m.content);
        out.push('\n');
    }
    out
}

/// Stable digest identifying a request across runs and platforms.
pub fn request_digest(request: &ChatRequest) -> String {
    digest_text(&canonical_request(request))
}

// ---------------------------------------------------------------------------
// Replay / record fixtures
// ---------------------------------------------------------------------------

/// One recorded exchange; the full request rides along for auditability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub digest: String,
    pub request: ChatRequest,
    pub response: ChatResponse,
}

/// Load a fixture file (one JSON entry per line) into a digest map.
pub fn load_fixture(path: &Path) -> Result<BTreeMap<String, ChatResponse>, GatewayError> {
    let file = std::fs::File::open(path).map_err(|e| GatewayError::FixtureIo {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut map = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GatewayError::FixtureIo {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: FixtureEntry =
            serde_json::from_str(&line).map_err(|e| GatewayError::FixtureIo {
                path: path.to_path_buf(),
                message: format!("line {}: {}", i + 1, e),
            })?;
        map.insert(entry.digest, entry.response);
    }
    Ok(map)
}

/// Returns recorded responses keyed by request digest.
pub struct ReplayBackend {
    entries: BTreeMap<String, ChatResponse>,
}

impl ReplayBackend {
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        Ok(ReplayBackend { entries: load_fixture(path)? })
    }

    pub fn from_entries(entries: BTreeMap<String, ChatResponse>) -> Self {
        ReplayBackend { entries }
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let digest = request_digest(request);
        self.entries
            .get(&digest)
            .cloned()
            .ok_or(GatewayError::MissingFixture { digest })
    }
}

/// Wraps another backend and appends every exchange to a fixture file.
pub struct RecordBackend {
    inner: Box<dyn ChatBackend>,
    path: PathBuf,
    writer: Mutex<std::fs::File>,
}

impl RecordBackend {
    pub fn create(inner: Box<dyn ChatBackend>, path: &Path) -> Result<Self, GatewayError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| GatewayError::FixtureIo {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::FixtureIo {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Ok(RecordBackend { inner, path: path.to_path_buf(), writer: Mutex::new(file) })
    }
}

impl ChatBackend for RecordBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let response = self.inner.complete(request)?;
        let entry = FixtureEntry {
            digest: request_digest(request),
            request: request.clone(),
            response: response.clone(),
        };
        let line = serde_json::to_string(&entry).expect("fixture entry serializes");
        let mut file = self.writer.lock().expect("fixture writer poisoned");
        writeln!(file, "{}", line).map_err(|e| GatewayError::FixtureIo {
            path: self.path.clone(),
            message: e.to_string(),
        })?;
        Ok(response)
    }
}

/// Returns scripted responses by sequence position.
pub struct MockBackend {
    script: Mutex<std::collections::VecDeque<String>>,
}

impl MockBackend {
    pub fn new(responses: Vec<String>) -> Self {
        MockBackend { script: Mutex::new(responses.into()) }
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, _request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut script = self.script.lock().expect("mock script poisoned");
        match script.pop_front() {
            Some(content) => Ok(ChatResponse { content, usage: None, latency_ms: 0 }),
            None => Err(GatewayError::ScriptExhausted),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(content: &str) -> ChatRequest {
        ChatRequest::new("gpt-4o-mini", 1.0).system("sys").user(content)
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        assert_eq!(request_digest(&req("hello")), request_digest(&req("hello")));
        assert_ne!(request_digest(&req("hello")), request_digest(&req("hello ")));
        assert_ne!(request_digest(&req("hello")), request_digest(&req("hellp")));
    }

    #[test]
    fn digest_normalizes_nothing_inside_content() {
        let a = req("line1\n  line2");
        let b = req("line1\nline2");
        assert_ne!(request_digest(&a), request_digest(&b));
    }

    #[test]
    fn digest_depends_on_model_and_temperature() {
        let mut a = req("x");
        let mut b = req("x");
        a.model = "m1".into();
        b.model = "m2".into();
        assert_ne!(request_digest(&a), request_digest(&b));
        let mut c = req("x");
        c.temperature = 0.5;
        assert_ne!(request_digest(&req("x")), request_digest(&c));
    }

    #[test]
    fn replay_hit_and_miss() {
        let r = req("prompt");
        let mut entries = BTreeMap::new();
        entries.insert(
            request_digest(&r),
            ChatResponse { content: "recorded".into(), usage: None, latency_ms: 7 },
        );
        let backend = ReplayBackend::from_entries(entries);
        let hit = backend.complete(&r).unwrap();
        assert_eq!(hit.content, "recorded");
        assert_eq!(hit.latency_ms, 7);
        let miss = backend.complete(&req("other"));
        match miss {
            Err(GatewayError::MissingFixture { digest }) => {
                assert_eq!(digest, request_digest(&req("other")));
            }
            other => panic!("expected MissingFixture, got {:?}", other.map(|r| r.content)),
        }
    }

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.jsonl");
        let mock = MockBackend::new(vec!["answer one".into(), "answer two".into()]);
        let recorder = RecordBackend::create(Box::new(mock), &path).unwrap();
        let r1 = req("first");
        let r2 = req("second");
        let a1 = recorder.complete(&r1).unwrap();
        let a2 = recorder.complete(&r2).unwrap();
        drop(recorder);

        let replay = ReplayBackend::open(&path).unwrap();
        assert_eq!(replay.complete(&r1).unwrap(), a1);
        assert_eq!(replay.complete(&r2).unwrap(), a2);
    }

    #[test]
    fn mock_script_exhaustion() {
        let mock = MockBackend::new(vec!["only".into()]);
        assert!(mock.complete(&req("a")).is_ok());
        assert!(matches!(mock.complete(&req("b")), Err(GatewayError::ScriptExhausted)));
    }

    #[test]
    fn replay_tolerates_concurrent_calls() {
        let r = req("parallel");
        let mut entries = BTreeMap::new();
        entries.insert(
            request_digest(&r),
            ChatResponse { content: "ok".into(), usage: None, latency_ms: 0 },
        );
        let backend = std::sync::Arc::new(ReplayBackend::from_entries(entries));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let b = backend.clone();
                let r = r.clone();
                std::thread::spawn(move || b.complete(&r).unwrap().content)
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), "ok");
        }
    }
}
