//! Live backend speaking the OpenAI-compatible chat-completions protocol.
//!
//! The credential comes from the `LINGUA_AUDIT_API_KEY` environment variable
//! only; configs and logfiles are shareable artifacts and never carry it.
//! Timeouts, retry counts, and rate limits are all settings.

use std::time::Duration;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::rate_limit::{InFlightGate, RateLimiter};
use super::{BackendError, ChatBackend, ChatRequest, ChatResponse};
use crate::rng::SplitMix64;

pub const API_KEY_ENV_VAR: &str = "LINGUA_AUDIT_API_KEY";

/// Settings for the live backend. Defaults mirror a cautious production
/// client: 5 attempts, full-jitter exponential backoff, 4 in-flight requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveSettings {
    pub base_url: String,
    pub requests_per_minute: u32,
    /// Window backing the requests-per-minute limit; shrinkable in tests.
    pub rate_window_seconds: f64,
    pub max_attempts: u32,
    pub timeout_seconds: f64,
    pub max_concurrency: usize,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
}

impl Default for LiveSettings {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            requests_per_minute: 60,
            rate_window_seconds: 60.0,
            max_attempts: 5,
            timeout_seconds: 120.0,
            max_concurrency: 4,
            backoff_base_ms: 500,
            backoff_cap_ms: 30_000,
        }
    }
}

pub struct LiveBackend {
    client: reqwest::blocking::Client,
    settings: LiveSettings,
    api_key: String,
    limiter: RateLimiter,
    gate: InFlightGate,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 2],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: WireUsage,
}

impl LiveBackend {
    /// Reads the credential from [`API_KEY_ENV_VAR`].
    pub fn from_env(settings: LiveSettings) -> Result<Self, BackendError> {
        let api_key = std::env::var(API_KEY_ENV_VAR)
            .map_err(|_| BackendError::MissingCredential(API_KEY_ENV_VAR))?;
        Self::new(settings, api_key)
    }

    pub fn new(settings: LiveSettings, api_key: String) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(settings.timeout_seconds))
            .build()
            .map_err(|e| BackendError::Io(format!("cannot build http client: {e}")))?;
        let limiter = RateLimiter::new(
            settings.requests_per_minute as usize,
            Duration::from_secs_f64(settings.rate_window_seconds),
        );
        let gate = InFlightGate::new(settings.max_concurrency);
        Ok(Self {
            client,
            settings,
            api_key,
            limiter,
            gate,
        })
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/chat/completions",
            self.settings.base_url.trim_end_matches('/')
        )
    }

    fn dispatch_once(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        self.limiter.acquire();
        let body = WireRequest {
            model: &request.model_id,
            messages: [
                WireMessage {
                    role: "system",
                    content: &request.system_text,
                },
                WireMessage {
                    role: "user",
                    content: &request.user_text,
                },
            ],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let response = self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Transport {
                attempts: 1,
                message: e.to_string(),
            })?;
        let status = response.status();
        if !status.is_success() {
            let message = response.text().unwrap_or_default();
            return Err(match status.as_u16() {
                401 | 403 => BackendError::Auth(message),
                429 => BackendError::RateLimited(message),
                code => BackendError::Http {
                    status: code,
                    message,
                },
            });
        }
        let parsed: WireResponse = response
            .json()
            .map_err(|e| BackendError::Io(format!("cannot parse chat response: {e}")))?;
        let text = parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .unwrap_or_default();
        Ok(ChatResponse {
            text,
            prompt_tokens: parsed.usage.prompt_tokens,
            completion_tokens: parsed.usage.completion_tokens,
            backend_id: "live".into(),
            timestamp: Utc::now(),
        })
    }
}

fn retryable(error: &BackendError) -> bool {
    match error {
        BackendError::RateLimited(_) | BackendError::Transport { .. } => true,
        BackendError::Http { status, .. } => *status == 408 || *status >= 500,
        _ => false,
    }
}

/// Full-jitter exponential backoff: uniform in [0, min(cap, base * 2^attempt)].
/// The jitter stream is seeded from the request digest so reruns are
/// reproducible.
fn backoff_delay(base_ms: u64, cap_ms: u64, attempt: u32, salt: u64) -> Duration {
    let ceiling = base_ms
        .saturating_mul(1u64 << attempt.min(20))
        .min(cap_ms)
        .max(1);
    let mut rng = SplitMix64::new(salt.wrapping_add(attempt as u64));
    Duration::from_millis(rng.next_below(ceiling + 1))
}

fn digest_salt(digest: &str) -> u64 {
    let mut bytes = [0u8; 8];
    for (i, b) in digest.as_bytes().iter().take(8).enumerate() {
        bytes[i] = *b;
    }
    u64::from_be_bytes(bytes)
}

impl ChatBackend for LiveBackend {
    fn id(&self) -> &str {
        "live"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let _permit = self.gate.acquire();
        let salt = digest_salt(&request.key().digest);
        let mut last_error = None;
        for attempt in 0..self.settings.max_attempts {
            match self.dispatch_once(request) {
                Ok(response) => return Ok(response),
                Err(error) => {
                    if !retryable(&error) {
                        return Err(error);
                    }
                    last_error = Some(error);
                    if attempt + 1 < self.settings.max_attempts {
                        std::thread::sleep(backoff_delay(
                            self.settings.backoff_base_ms,
                            self.settings.backoff_cap_ms,
                            attempt,
                            salt,
                        ));
                    }
                }
            }
        }
        let message = last_error
            .map(|e| e.to_string())
            .unwrap_or_else(|| "no attempts were made".into());
        Err(BackendError::Transport {
            attempts: self.settings.max_attempts,
            message,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_is_bounded_and_deterministic() {
        for attempt in 0..6 {
            let a = backoff_delay(100, 2000, attempt, 42);
            let b = backoff_delay(100, 2000, attempt, 42);
            assert_eq!(a, b);
            let ceiling = (100u64 << attempt).min(2000);
            assert!(a.as_millis() as u64 <= ceiling);
        }
    }

    #[test]
    fn auth_errors_are_not_retryable() {
        assert!(!retryable(&BackendError::Auth("nope".into())));
        assert!(retryable(&BackendError::RateLimited("slow down".into())));
        assert!(retryable(&BackendError::Http {
            status: 503,
            message: String::new()
        }));
        assert!(!retryable(&BackendError::Http {
            status: 400,
            message: String::new()
        }));
    }
}
