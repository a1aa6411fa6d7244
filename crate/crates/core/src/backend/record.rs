//! Recording wrapper: appends every exchange to a JSON Lines log.
//!
//! One object per line, fields in fixed order so a parse/re-serialize cycle
//! is byte-exact:
//! `{digest, occurrence, model, system, user, temperature, max_tokens,
//!   response_text, prompt_tokens, completion_tokens, timestamp}`

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, ChatRequest, ChatResponse};

/// One recorded exchange. Field order is the wire order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    pub digest: String,
    pub occurrence: u32,
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub response_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// RFC 3339 UTC with microsecond precision, e.g.
    /// `2023-07-01T00:00:00.000000Z`.
    pub timestamp: String,
}

/// Formats a timestamp the way exchange logs store it.
pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Micros, true)
}

pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|e| format!("unparsable timestamp '{raw}': {e}"))
}

/// Wraps any backend and appends each exchange to `sink`.
///
/// Identical (digest, occurrence) pairs are recorded once: repeats of the
/// same temperature-zero translation collapse to a single entry, which is
/// exactly what replay needs.
pub struct RecordingBackend<B> {
    inner: B,
    writer: Mutex<BufWriter<File>>,
    seen: Mutex<HashSet<(String, u32)>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn create(inner: B, sink: &Path) -> Result<Self, BackendError> {
        let file = File::create(sink).map_err(|e| {
            BackendError::Io(format!(
                "cannot create record log '{}': {e}",
                sink.display()
            ))
        })?;
        Ok(Self {
            inner,
            writer: Mutex::new(BufWriter::new(file)),
            seen: Mutex::new(HashSet::new()),
        })
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let response = self.inner.complete(request)?;
        let key = request.key();
        let is_new = self
            .seen
            .lock()
            .unwrap()
            .insert((key.digest.clone(), key.occurrence_index));
        if is_new {
            let record = ExchangeRecord {
                digest: key.digest,
                occurrence: key.occurrence_index,
                model: request.model_id.clone(),
                system: request.system_text.clone(),
                user: request.user_text.clone(),
                temperature: request.temperature,
                max_tokens: request.max_tokens,
                response_text: response.text.clone(),
                prompt_tokens: response.prompt_tokens,
                completion_tokens: response.completion_tokens,
                timestamp: format_timestamp(response.timestamp),
            };
            let line = serde_json::to_string(&record)
                .map_err(|e| BackendError::Io(format!("cannot serialize exchange: {e}")))?;
            let mut writer = self.writer.lock().unwrap();
            writeln!(writer, "{line}")
                .and_then(|_| writer.flush())
                .map_err(|e| BackendError::Io(format!("cannot append exchange: {e}")))?;
        }
        Ok(response)
    }
}
