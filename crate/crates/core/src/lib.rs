//! Customize generic visual-language model backends into industrial anomaly
//! detectors.
//!
//! The pipeline: heterogeneous inputs (RGB images, point clouds, time
//! series, video frames) reduce to a unified 2D canonical image
//! ([`preprocess`]); a cumulative prompting ladder assembles multi-modal
//! messages around a query ([`prompt`]); a backend ([`backend`]) completes
//! them over the wire or from deterministic offline substitutes; responses
//! parse into binary verdicts ([`parser`]); and the benchmark harness
//! ([`harness`]) orchestrates runs over MVTec-AD-style trees ([`dataset`]),
//! reporting ACC/AUROC/AUPR per category ([`metrics`]).
//!
//! With the default `parallel` feature, sample evaluation fans out over a
//! bounded rayon worker pool; without it everything runs sequentially.
//! Report content never depends on the worker count.

pub mod backend;
pub mod dataset;
pub mod harness;
pub mod metrics;
pub mod parser;
pub mod preprocess;
pub mod prompt;
pub mod synth;
pub mod types;

pub use types::{
    CanonicalImage, DetectionResult, EvalRecord, Label, Modality, ParsePath, Provenance,
    QuerySample, SampleSource,
};
