//! Chat-completion backends: live HTTP, replay-from-log, and scripted rules,
//! all behind one contract.
//!
//! Every exchange is a fresh, memoryless request/response pair; no
//! conversation state is carried between calls. Identical request content can
//! legitimately yield different answers at nonzero temperature, so requests
//! carry an `occurrence_index` and record/replay keys on
//! (content digest, occurrence) rather than call order.

mod live;
mod rate_limit;
mod record;
mod replay;
mod scripted;

pub use live::{LiveBackend, LiveSettings, API_KEY_ENV_VAR};
pub use rate_limit::{InFlightGate, RateLimiter};
pub use record::{format_timestamp, parse_timestamp, ExchangeRecord, RecordingBackend};
pub use replay::ReplayBackend;
pub use scripted::{Script, ScriptRule, ScriptedBackend};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::LanguageCode;
use crate::prompts::PRIMER_TRANSLATOR;

/// One stateless chat exchange to issue.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model_id: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Which repeat of an identical request this is (0-based).
    pub occurrence_index: u32,
}

impl ChatRequest {
    pub fn key(&self) -> RequestKey {
        RequestKey {
            digest: content_digest(
                &self.model_id,
                &self.system_text,
                &self.user_text,
                self.temperature,
                self.max_tokens,
            ),
            occurrence_index: self.occurrence_index,
        }
    }
}

/// Content-addressed identity of a request: stable across runs and platforms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestKey {
    /// Hex SHA-256 over (model_id, system_text, user_text, temperature,
    /// max_tokens), each field length-prefixed.
    pub digest: String,
    pub occurrence_index: u32,
}

/// SHA-256 over the request content. Strings are length-prefixed to keep the
/// encoding unambiguous; the temperature hashes by its IEEE-754 bits.
pub fn content_digest(
    model_id: &str,
    system_text: &str,
    user_text: &str,
    temperature: f64,
    max_tokens: u32,
) -> String {
    let mut hasher = Sha256::new();
    for part in [model_id, system_text, user_text] {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part.as_bytes());
    }
    hasher.update(temperature.to_bits().to_be_bytes());
    hasher.update(max_tokens.to_be_bytes());
    hex::encode(hasher.finalize())
}

/// One backend answer, with token accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub backend_id: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limit or quota exhausted: {0}")]
    RateLimited(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend returned HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("no recorded response for digest {digest} occurrence {occurrence_index}")]
    ReplayMiss {
        digest: String,
        occurrence_index: u32,
    },
    #[error("no scripted rule matches the request (user text starts: {user_prefix:?})")]
    NoScriptedRule { user_prefix: String },
    #[error("log line {line}: {message}")]
    MalformedLog { line: u64, message: String },
    #[error("log line {line}: duplicate entry for digest {digest} occurrence {occurrence_index}")]
    DuplicateLogEntry {
        line: u64,
        digest: String,
        occurrence_index: u32,
    },
    #[error("missing API credential: set the {0} environment variable")]
    MissingCredential(&'static str),
    #[error("backend i/o: {0}")]
    Io(String),
}

impl BackendError {
    /// Short machine-readable class, used in failure records.
    pub fn class(&self) -> &'static str {
        match self {
            Self::Auth(_) => "auth",
            Self::RateLimited(_) => "rate_limit",
            Self::Transport { .. } => "transport",
            Self::Http { .. } => "http",
            Self::ReplayMiss { .. } => "replay_miss",
            Self::NoScriptedRule { .. } => "no_scripted_rule",
            Self::MalformedLog { .. } => "malformed_log",
            Self::DuplicateLogEntry { .. } => "duplicate_log_entry",
            Self::MissingCredential(_) => "missing_credential",
            Self::Io(_) => "io",
        }
    }
}

/// The chat-completion contract. Implementations must be callable
/// concurrently; none carries conversation state between calls.
pub trait ChatBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        (**self).complete(request)
    }
}

/// Model and token settings shared by every request of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatSettings {
    pub model_id: String,
    pub max_tokens: u32,
}

/// Result of a translation call. `response` and `key` are `None` when the
/// pivot short-circuit applied and no backend call was made.
#[derive(Debug, Clone)]
pub struct TranslationOutcome {
    pub text: String,
    pub response: Option<ChatResponse>,
    pub key: Option<RequestKey>,
}

/// Translates `text` from `source` into `target` with the translator primer
/// at temperature zero, in a fresh instance. When source and target coincide
/// (the pivot-language control case) the text is returned unchanged without
/// touching the backend.
pub fn translate(
    backend: &dyn ChatBackend,
    settings: &ChatSettings,
    text: &str,
    source: &LanguageCode,
    target: &LanguageCode,
    occurrence_index: u32,
) -> Result<TranslationOutcome, BackendError> {
    if source == target {
        return Ok(TranslationOutcome {
            text: text.to_string(),
            response: None,
            key: None,
        });
    }
    let request = translation_request(settings, text, target, occurrence_index);
    let key = request.key();
    let response = backend.complete(&request)?;
    Ok(TranslationOutcome {
        text: response.text.clone(),
        response: Some(response),
        key: Some(key),
    })
}

/// The exact request `translate` issues; exposed so callers can key on it.
pub fn translation_request(
    settings: &ChatSettings,
    text: &str,
    target: &LanguageCode,
    occurrence_index: u32,
) -> ChatRequest {
    ChatRequest {
        model_id: settings.model_id.clone(),
        system_text: PRIMER_TRANSLATOR.to_string(),
        user_text: format!(
            "Translate the following text into {}:\n\n{}",
            target.display_name(),
            text
        ),
        temperature: 0.0,
        max_tokens: settings.max_tokens,
        occurrence_index,
    }
}

/// Wrapper that counts calls and keeps the requests it saw; used by tests and
/// by the pipeline's request tally.
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicU64,
    requests: Mutex<Vec<ChatRequest>>,
}

impl<B: ChatBackend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: ChatBackend> ChatBackend for CountingBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}
