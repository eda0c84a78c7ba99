//! Uniform client abstraction over visual-language model services, plus
//! deterministic offline substitutes (mock and replay) for testing and
//! regression.

mod fixture;
mod live;
mod mock;
mod ratelimit;

pub use fixture::{FixtureRecord, FixtureStore, RecordingBackend, ReplayBackend};
pub(crate) use fixture::unix_timestamp;
pub use live::{LiveBackend, WireFormat};
pub use mock::{mock_oracle, MockBackend};
pub use ratelimit::RateLimiter;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::PromptBundle;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("credential environment variable {env_var} is not set")]
    AuthMissing { env_var: String },
    #[error("rate limited by the service and retries exhausted after {attempts} attempts")]
    RateLimitedExhausted { attempts: u32 },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("non-retryable http status {status}: {body}")]
    BadStatus { status: u16, body: String },
    #[error("fixture has no entry for request digest {digest} (prompt drift since recording?)")]
    FixtureMiss { digest: String },
    #[error("could not extract completion text from the service response: {message}")]
    MalformedResponse { message: String },
    #[error("fixture io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Connection and budget settings for one backend service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub backend_id: String,
    #[serde(default)]
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the credential. Credentials
    /// never appear in config files or flags.
    #[serde(default)]
    pub api_key_env: String,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Maximum requests per 60-second window.
    #[serde(default = "default_rate_limit")]
    pub rate_limit: u32,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
}

fn default_timeout_s() -> f64 {
    30.0
}

fn default_max_retries() -> u32 {
    3
}

fn default_rate_limit() -> u32 {
    60
}

/// Responses are one label plus a short reason.
fn default_max_output_tokens() -> u32 {
    256
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_s > 0.0) {
            return Err(format!("timeout_s must be > 0, got {}", self.timeout_s));
        }
        if self.rate_limit < 1 {
            return Err("rate_limit must be >= 1".to_string());
        }
        Ok(())
    }
}

/// Raw completion from a backend, with request identity and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    /// Stable hash of the serialized request; see [`request_digest`].
    pub request_digest: String,
    pub latency_ms: f64,
    pub attempt_count: u32,
}

/// Stable 256-bit digest of (backend_id, model_name, serialized bundle).
/// A pure function of its inputs: the bundle serializes canonically (fixed
/// field order, text as UTF-8, image pixels as raw RGB in base64), so the
/// same request hashes identically on any platform.
pub fn request_digest(backend_id: &str, model_name: &str, bundle: &PromptBundle) -> String {
    let mut hasher = Sha256::new();
    hasher.update(backend_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(model_name.as_bytes());
    hasher.update([0u8]);
    hasher.update(bundle.canonical_json().as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// A visual-language model service (or stand-in) that completes prompt
/// bundles. Implementations are shareable across worker threads.
pub trait Backend: Send + Sync {
    fn backend_id(&self) -> &str;
    fn model_name(&self) -> &str;
    fn query(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError>;

    fn digest(&self, bundle: &PromptBundle) -> String {
        request_digest(self.backend_id(), self.model_name(), bundle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{PromptStrategy, PromptTemplate};
    use crate::types::{CanonicalImage, Provenance};

    fn image(shade: u8) -> CanonicalImage {
        CanonicalImage::from_pixels(
            2,
            2,
            vec![shade; 12],
            Provenance::Raster { original_width: 2, original_height: 2 },
        )
    }

    #[test]
    fn digest_is_stable_and_input_sensitive() {
        let bundle = PromptTemplate::bundled()
            .build_prompt(PromptStrategy::Naive, image(7), None, None, None)
            .unwrap();
        let a = request_digest("mock", "m1", &bundle);
        let b = request_digest("mock", "m1", &bundle);
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert_ne!(a, request_digest("mock", "m2", &bundle));
        assert_ne!(a, request_digest("other", "m1", &bundle));
        let bundle2 = PromptTemplate::bundled()
            .build_prompt(PromptStrategy::Naive, image(8), None, None, None)
            .unwrap();
        assert_ne!(a, request_digest("mock", "m1", &bundle2));
    }

    #[test]
    fn config_validation() {
        let mut config = BackendConfig {
            backend_id: "mock".into(),
            endpoint_url: String::new(),
            model_name: "m".into(),
            api_key_env: "NONE".into(),
            timeout_s: 30.0,
            max_retries: 2,
            rate_limit: 60,
            max_output_tokens: 256,
        };
        assert!(config.validate().is_ok());
        config.timeout_s = 0.0;
        assert!(config.validate().is_err());
        config.timeout_s = 5.0;
        config.rate_limit = 0;
        assert!(config.validate().is_err());
    }
}
