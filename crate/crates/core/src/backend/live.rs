//! HTTPS client for chat-completions-style visual-language services.
//!
//! One generic adapter with per-service request shaping keeps provider
//! differences at the edge: the wire format is selected from the backend id,
//! everything else (retry, rate limiting, digesting) is shared.

use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::Rng;
use serde_json::{json, Value};

use super::{mock::elapsed_ms, Backend, BackendConfig, BackendError, BackendResponse, RateLimiter};
use crate::prompt::{PromptBundle, Segment};

/// Request/response shaping for a provider family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireFormat {
    /// `messages` with multi-part content; data-URL inline images.
    OpenAiChat,
    /// `contents` with `parts`; `inline_data` images.
    Gemini,
}

impl WireFormat {
    /// Adapter selection by backend id: ids containing "gemini" use the
    /// Gemini shape, everything else the chat-completions shape.
    pub fn for_backend_id(backend_id: &str) -> WireFormat {
        if backend_id.to_ascii_lowercase().contains("gemini") {
            WireFormat::Gemini
        } else {
            WireFormat::OpenAiChat
        }
    }

    fn request_body(self, config: &BackendConfig, bundle: &PromptBundle) -> Value {
        match self {
            WireFormat::OpenAiChat => {
                let content: Vec<Value> = bundle
                    .segments
                    .iter()
                    .map(|segment| match segment {
                        Segment::Text { content, .. } => json!({"type": "text", "text": content}),
                        Segment::Image { image, .. } => {
                            let data = BASE64.encode(image.to_png_bytes());
                            json!({
                                "type": "image_url",
                                "image_url": {"url": format!("data:image/png;base64,{data}")}
                            })
                        }
                    })
                    .collect();
                json!({
                    "model": config.model_name,
                    "messages": [{"role": "user", "content": content}],
                    "max_tokens": config.max_output_tokens,
                    "temperature": 0,
                })
            }
            WireFormat::Gemini => {
                let parts: Vec<Value> = bundle
                    .segments
                    .iter()
                    .map(|segment| match segment {
                        Segment::Text { content, .. } => json!({"text": content}),
                        Segment::Image { image, .. } => json!({
                            "inline_data": {
                                "mime_type": "image/png",
                                "data": BASE64.encode(image.to_png_bytes()),
                            }
                        }),
                    })
                    .collect();
                json!({
                    "contents": [{"parts": parts}],
                    "generationConfig": {
                        "maxOutputTokens": config.max_output_tokens,
                        "temperature": 0,
                    },
                })
            }
        }
    }

    fn extract_text(self, body: &Value) -> Option<String> {
        match self {
            WireFormat::OpenAiChat => body
                .pointer("/choices/0/message/content")
                .and_then(Value::as_str)
                .map(str::to_string),
            WireFormat::Gemini => {
                let parts = body.pointer("/candidates/0/content/parts")?.as_array()?;
                let text: String =
                    parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect();
                if text.is_empty() {
                    None
                } else {
                    Some(text)
                }
            }
        }
    }
}

/// Live HTTPS backend with retry, backoff, and shared rate limiting.
pub struct LiveBackend {
    config: BackendConfig,
    wire: WireFormat,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
    backoff_base: Duration,
    request_log: std::sync::Mutex<Vec<Instant>>,
}

impl LiveBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate().map_err(|message| BackendError::MalformedResponse { message })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_s))
            .build()
            .map_err(|e| BackendError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(LiveBackend {
            wire: WireFormat::for_backend_id(&config.backend_id),
            limiter: RateLimiter::per_minute(config.rate_limit),
            client,
            backoff_base: Duration::from_secs(1),
            config,
            request_log: std::sync::Mutex::new(Vec::new()),
        })
    }

    /// Instants at which requests (including retries) were sent, for
    /// auditing rate-limit behavior.
    pub fn request_timestamps(&self) -> Vec<Instant> {
        self.request_log.lock().unwrap().clone()
    }

    /// Overrides the backoff base (default 1s). Used by tests to keep
    /// fault-injection runs fast.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    pub fn wire_format(&self) -> WireFormat {
        self.wire
    }

    fn api_key(&self) -> Result<String, BackendError> {
        match std::env::var(&self.config.api_key_env) {
            Ok(key) if !key.is_empty() => Ok(key),
            _ => Err(BackendError::AuthMissing { env_var: self.config.api_key_env.clone() }),
        }
    }

    /// Exponential backoff with full jitter: uniform in
    /// [0, base * 2^attempt).
    fn backoff(&self, attempt: u32) -> Duration {
        let cap = self.backoff_base.as_secs_f64() * f64::from(2u32.saturating_pow(attempt));
        Duration::from_secs_f64(rand::thread_rng().gen_range(0.0..cap.max(1e-9)))
    }
}

enum AttemptFailure {
    RateLimited,
    ServerError { status: u16, body: String },
    Transport { message: String },
}

impl Backend for LiveBackend {
    fn backend_id(&self) -> &str {
        &self.config.backend_id
    }

    fn model_name(&self) -> &str {
        &self.config.model_name
    }

    fn query(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError> {
        let start = Instant::now();
        let key = self.api_key()?;
        let digest = self.digest(bundle);
        let body = self.wire.request_body(&self.config, bundle);

        let max_attempts = self.config.max_retries + 1;
        let mut last_failure = None;
        for attempt in 1..=max_attempts {
            // retries are requests too: every attempt takes a limiter slot
            self.limiter.acquire();
            self.request_log.lock().unwrap().push(Instant::now());
            let request = match self.wire {
                WireFormat::OpenAiChat => self
                    .client
                    .post(&self.config.endpoint_url)
                    .bearer_auth(&key)
                    .json(&body),
                WireFormat::Gemini => self
                    .client
                    .post(&self.config.endpoint_url)
                    .header("x-goog-api-key", &key)
                    .json(&body),
            };
            let failure = match request.send() {
                Ok(response) => {
                    let status = response.status();
                    let text = response.text().unwrap_or_default();
                    if status.is_success() {
                        let value: Value = serde_json::from_str(&text).map_err(|e| {
                            BackendError::MalformedResponse { message: format!("{e}: {text}") }
                        })?;
                        let completion = self.wire.extract_text(&value).ok_or_else(|| {
                            BackendError::MalformedResponse {
                                message: format!("no completion text in response: {text}"),
                            }
                        })?;
                        return Ok(BackendResponse {
                            text: completion,
                            request_digest: digest,
                            latency_ms: elapsed_ms(start),
                            attempt_count: attempt,
                        });
                    } else if status.as_u16() == 429 {
                        AttemptFailure::RateLimited
                    } else if status.is_server_error() {
                        AttemptFailure::ServerError { status: status.as_u16(), body: text }
                    } else {
                        // non-retryable client error; body preserved for diagnosis
                        return Err(BackendError::BadStatus { status: status.as_u16(), body: text });
                    }
                }
                Err(e) => AttemptFailure::Transport { message: e.to_string() },
            };
            last_failure = Some(failure);
            if attempt < max_attempts {
                std::thread::sleep(self.backoff(attempt - 1));
            }
        }

        Err(match last_failure.expect("at least one attempt ran") {
            AttemptFailure::RateLimited => {
                BackendError::RateLimitedExhausted { attempts: max_attempts }
            }
            AttemptFailure::ServerError { status, body } => BackendError::BadStatus { status, body },
            AttemptFailure::Transport { message } => {
                BackendError::Transport { attempts: max_attempts, message }
            }
        })
    }
}
