//! Helpers shared by the integration and acceptance suites.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use vlmad::backend::BackendConfig;
use vlmad::harness::{BackendMode, BackendSection, DatasetSection, RunConfig, RunSection};
use vlmad::metrics::ScoredLabels;
use vlmad::types::{CanonicalImage, Label, Provenance};

pub const REPLAY_BACKEND_ID: &str = "scripted";
pub const REPLAY_MODEL_NAME: &str = "bottle-session-v1";

/// Authored responses for the 30-sample replay fixture, in dataset scan
/// order: `test/broken/000..014` then `test/good/000..014`. Ground truth is
/// 1 for the first fifteen and 0 for the rest. The second column is the
/// label the parser must extract.
///
/// Confusion by construction: 12/15 true positives, 13/15 true negatives,
/// so ACC = 25/30, AUROC = 5/6 and AUPR = 11/14 under score = label.
pub const REPLAY_TEXTS: [(&str, u8); 30] = [
    ("1, braided material wrapped around the bottle neck", 1),
    ("1, crack running across the rim", 1),
    ("{\"anomaly\": 1, \"reason\": \"chip missing from the rim\"}", 1),
    ("0, the bottle matches the reference", 0),
    ("1: dark contamination inside the bottle", 1),
    ("The detection result is 1 since the rim is chipped.", 1),
    ("anomaly: 1\nreason: deep scratch near the opening", 1),
    ("1, glass fragment resting inside the bottle", 1),
    ("Everything appears normal in this capture.", 0),
    ("1 - the opening is deformed", 1),
    ("A clear defect is visible along the inner wall.", 1),
    ("1, residue smeared across the glass", 1),
    ("My answer is 1 because the contour is uneven.", 1),
    ("0, surface consistent with the reference example", 0),
    ("1, the rim shows a hairline fracture", 1),
    ("0, the bottle matches the reference closely", 0),
    ("0, no deviation from the reference", 0),
    ("1, possible discoloration near the rim", 1),
    ("0, clean rim and clear glass", 0),
    ("The image looks normal with no defects visible.", 0),
    ("0, geometry and texture agree with the reference", 0),
    ("{\"anomaly\": 0, \"reason\": \"no differences found\"}", 0),
    ("0, nothing unusual detected", 0),
    ("After inspection my verdict is 0", 0),
    ("1, faint smudge on the glass surface", 1),
    ("0, the opening is round and intact", 0),
    ("No anomaly is present in this sample.", 0),
    ("0, matches the reference in shape and tone", 0),
    ("0, consistent lighting and clean surface", 0),
    ("result: 0\nreason: identical to the reference", 0),
];

/// Ground truth aligned with [`REPLAY_TEXTS`].
pub fn replay_ground_truth() -> Vec<Label> {
    (0..30)
        .map(|i| if i < 15 { Label::Anomalous } else { Label::Normal })
        .collect()
}

pub fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bottle_replay.jsonl")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn corpus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/parser_corpus.jsonl")
}

/// Deterministic non-uniform image for snapshot and digest tests.
pub fn gradient_image(width: u32, height: u32) -> CanonicalImage {
    let mut pixels = Vec::with_capacity((width * height * 3) as usize);
    for y in 0..height {
        for x in 0..width {
            pixels.push(((x * 37 + y * 11) % 256) as u8);
            pixels.push(((x * 5 + y * 73) % 256) as u8);
            pixels.push(((x * 17 + y * 29 + 128) % 256) as u8);
        }
    }
    CanonicalImage::from_pixels(
        width,
        height,
        pixels,
        Provenance::Raster { original_width: width, original_height: height },
    )
}

pub fn uniform_image(shade: u8) -> CanonicalImage {
    CanonicalImage::from_pixels(
        8,
        8,
        vec![shade; 8 * 8 * 3],
        Provenance::Raster { original_width: 8, original_height: 8 },
    )
}

/// Run config for mock runs over a synthetic tree.
pub fn mock_config(
    root: &Path,
    output_dir: &Path,
    cache_path: Option<PathBuf>,
    strategies: &[&str],
    workers: usize,
) -> RunConfig {
    RunConfig {
        dataset: DatasetSection { root: root.to_path_buf(), categories: None, sample_limit: None },
        run: RunSection {
            strategies: strategies.iter().map(|s| s.to_string()).collect(),
            workers,
            repeat: 1,
            output_dir: output_dir.to_path_buf(),
            cache_path,
        },
        backend: BackendSection {
            mode: BackendMode::Mock,
            config: BackendConfig {
                backend_id: "mock".into(),
                endpoint_url: String::new(),
                model_name: "mock-v1".into(),
                api_key_env: String::new(),
                timeout_s: 30.0,
                max_retries: 0,
                rate_limit: 600,
                max_output_tokens: 256,
            },
            mock_tau: vlmad::synth::MOCK_TAU,
            fixture_path: None,
        },
        preprocess: Default::default(),
        prompt: Default::default(),
        parser: Default::default(),
    }
}

/// Run config replaying the checked-in bottle fixture.
pub fn replay_config(
    root: &Path,
    output_dir: &Path,
    cache_path: Option<PathBuf>,
    workers: usize,
) -> RunConfig {
    let mut config = mock_config(root, output_dir, cache_path, &["reference"], workers);
    config.backend.mode = BackendMode::Replay;
    config.backend.config.backend_id = REPLAY_BACKEND_ID.into();
    config.backend.config.model_name = REPLAY_MODEL_NAME.into();
    config.backend.fixture_path = Some(fixture_path());
    config
}

/// O(n^2) pairwise AUROC oracle: fraction of (positive, negative) pairs with
/// the positive scored higher, ties counted half.
pub fn pairwise_auroc(data: &ScoredLabels) -> Option<f64> {
    let pos: Vec<f64> = data
        .pairs()
        .iter()
        .filter(|(_, l)| *l == Label::Anomalous)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = data
        .pairs()
        .iter()
        .filter(|(_, l)| *l == Label::Normal)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut credit = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                credit += 1.0;
            } else if p == n {
                credit += 0.5;
            }
        }
    }
    Some(credit / (pos.len() as f64 * neg.len() as f64))
}

/// Threshold-enumeration AUPR oracle: walk distinct scores descending,
/// classify everything at-or-above the threshold positive, and accumulate
/// recall-gain times precision. Recounts from scratch at every threshold.
pub fn threshold_aupr(data: &ScoredLabels) -> Option<f64> {
    let total_pos = data.pairs().iter().filter(|(_, l)| *l == Label::Anomalous).count();
    if total_pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = data.pairs().iter().map(|(s, _)| *s).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for threshold in thresholds {
        let mut tp = 0usize;
        let mut predicted = 0usize;
        for (score, label) in data.pairs() {
            if *score >= threshold {
                predicted += 1;
                if *label == Label::Anomalous {
                    tp += 1;
                }
            }
        }
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / predicted as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}
