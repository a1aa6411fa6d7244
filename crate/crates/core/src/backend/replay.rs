//! Replay backend: serves recorded responses keyed by (digest, occurrence).
//!
//! Keying is content-based, not order-based, so a replayed run may issue its
//! requests in any order and still receive the responses recorded for them.

use std::collections::HashMap;
use std::path::Path;

use super::record::{parse_timestamp, ExchangeRecord};
use super::{BackendError, ChatBackend, ChatRequest, ChatResponse};

#[derive(Debug)]
pub struct ReplayBackend {
    entries: HashMap<(String, u32), ExchangeRecord>,
}

impl ReplayBackend {
    pub fn from_path(source: &Path) -> Result<Self, BackendError> {
        let raw = std::fs::read_to_string(source).map_err(|e| {
            BackendError::Io(format!(
                "cannot read replay log '{}': {e}",
                source.display()
            ))
        })?;
        let mut entries = HashMap::new();
        for (index, line) in raw.lines().enumerate() {
            let line_no = index as u64 + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: ExchangeRecord =
                serde_json::from_str(line).map_err(|e| BackendError::MalformedLog {
                    line: line_no,
                    message: e.to_string(),
                })?;
            parse_timestamp(&record.timestamp).map_err(|message| BackendError::MalformedLog {
                line: line_no,
                message,
            })?;
            let key = (record.digest.clone(), record.occurrence);
            if entries.insert(key.clone(), record).is_some() {
                return Err(BackendError::DuplicateLogEntry {
                    line: line_no,
                    digest: key.0,
                    occurrence_index: key.1,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ChatBackend for ReplayBackend {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let key = request.key();
        let record = self
            .entries
            .get(&(key.digest.clone(), key.occurrence_index))
            .ok_or(BackendError::ReplayMiss {
                digest: key.digest,
                occurrence_index: key.occurrence_index,
            })?;
        let timestamp =
            parse_timestamp(&record.timestamp).expect("timestamps are validated at load time");
        Ok(ChatResponse {
            text: record.response_text.clone(),
            prompt_tokens: record.prompt_tokens,
            completion_tokens: record.completion_tokens,
            backend_id: "replay".into(),
            timestamp,
        })
    }
}
