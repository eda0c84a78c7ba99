//! Deterministic stand-in backend that decides the label from image
//! statistics, enabling exact end-to-end expectations in tests and ablations.

use std::time::Instant;

use super::{Backend, BackendError, BackendResponse};
use crate::prompt::{ImageRole, PromptBundle};
use crate::types::CanonicalImage;

/// Compares mean gray intensity: emits `"1, ..."` iff the query deviates
/// from the reference by more than `tau` intensity levels, else `"0, ..."`.
pub fn mock_oracle(reference: &CanonicalImage, query: &CanonicalImage, tau: f64) -> String {
    let deviation = (query.mean_intensity() - reference.mean_intensity()).abs();
    if deviation > tau {
        "1, mean intensity deviates from reference".to_string()
    } else {
        "0, mean intensity within tolerance of reference".to_string()
    }
}

/// Offline backend wrapping [`mock_oracle`]. Bundles without a reference
/// image get the fixed prior `"0, no reference available"`, which gives
/// ablations a deterministic naive-strategy baseline.
#[derive(Debug, Clone)]
pub struct MockBackend {
    model_name: String,
    tau: f64,
}

impl MockBackend {
    /// Panics unless `tau` lies in [0, 255].
    pub fn new(tau: f64) -> Self {
        assert!((0.0..=255.0).contains(&tau), "tau must lie in [0, 255]");
        MockBackend { model_name: "mock-v1".to_string(), tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

impl Backend for MockBackend {
    fn backend_id(&self) -> &str {
        "mock"
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn query(&self, bundle: &PromptBundle) -> Result<BackendResponse, BackendError> {
        let start = Instant::now();
        let query = bundle.image(ImageRole::Query).ok_or_else(|| BackendError::MalformedResponse {
            message: "bundle carries no query image".to_string(),
        })?;
        let text = match bundle.image(ImageRole::Reference) {
            Some(reference) => mock_oracle(reference, query, self.tau),
            None => "0, no reference available".to_string(),
        };
        Ok(BackendResponse {
            text,
            request_digest: self.digest(bundle),
            latency_ms: elapsed_ms(start),
            attempt_count: 1,
        })
    }
}

/// Elapsed wall time in milliseconds, clamped to a positive value so that
/// uncached records never carry a zero latency.
pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e3).max(1e-6)
}
