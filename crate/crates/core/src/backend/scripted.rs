//! Scripted backend: substring rules mapping requests to canned responses.
//!
//! Used for tests and offline demos. Responses are a pure function of the
//! request, so the backend is deterministic under any concurrency; the
//! timestamp is pinned to the Unix epoch to keep whole runs byte-stable.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, ChatRequest, ChatResponse};

/// One matching rule. All listed substrings must occur for the rule to fire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default)]
    pub user_contains: Vec<String>,
    #[serde(default)]
    pub system_contains: Vec<String>,
    pub response: String,
}

impl ScriptRule {
    fn matches(&self, request: &ChatRequest) -> bool {
        self.user_contains
            .iter()
            .all(|s| request.user_text.contains(s.as_str()))
            && self
                .system_contains
                .iter()
                .all(|s| request.system_text.contains(s.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
    /// Served when no rule matches; without it, unmatched requests error.
    #[serde(default)]
    pub default_response: Option<String>,
}

pub struct ScriptedBackend {
    script: Script,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        Self { script }
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            BackendError::Io(format!("cannot read script '{}': {e}", path.display()))
        })?;
        let script: Script = serde_json::from_str(&raw).map_err(|e| {
            BackendError::Io(format!("cannot parse script '{}': {e}", path.display()))
        })?;
        Ok(Self::new(script))
    }

    /// Builder-style rule keyed on user-text substrings; handy in tests.
    pub fn with_rule(mut self, user_contains: &[&str], response: &str) -> Self {
        self.script.rules.push(ScriptRule {
            user_contains: user_contains.iter().map(|s| s.to_string()).collect(),
            system_contains: Vec::new(),
            response: response.to_string(),
        });
        self
    }
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::new(Script::default())
    }
}

fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Fixed timestamp for scripted responses.
pub(crate) fn epoch() -> DateTime<Utc> {
    DateTime::<Utc>::from_timestamp(0, 0).expect("epoch is representable")
}

impl ChatBackend for ScriptedBackend {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let text = self
            .script
            .rules
            .iter()
            .find(|rule| rule.matches(request))
            .map(|rule| rule.response.clone())
            .or_else(|| self.script.default_response.clone())
            .ok_or_else(|| BackendError::NoScriptedRule {
                user_prefix: request.user_text.chars().take(60).collect(),
            })?;
        Ok(ChatResponse {
            prompt_tokens: word_count(&request.system_text) + word_count(&request.user_text),
            completion_tokens: word_count(&text),
            text,
            backend_id: "scripted".into(),
            timestamp: epoch(),
        })
    }
}
