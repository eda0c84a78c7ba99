//! Run configuration. All run parameters live in one TOML file so a run is
//! reproducible from a single artifact; credentials come only from the
//! environment variable named in the backend section.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::BackendConfig;
use crate::parser::KeywordConfig;
use crate::preprocess::{ChartSpec, PreprocessParams};
use crate::prompt::PromptStrategy;

use super::HarnessError;

/// Which transport serves backend queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendMode {
    /// Deterministic offline oracle.
    Mock,
    /// Serve recorded responses from the fixture file; no network.
    Replay,
    /// HTTPS to the configured endpoint.
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSection {
    pub root: PathBuf,
    /// Optional category filter; every named category must exist.
    #[serde(default)]
    pub categories: Option<Vec<String>>,
    /// First-k-per-test-folder sub-sampling for desk-scale runs.
    #[serde(default)]
    pub sample_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    /// Strategy identifiers, e.g. ["naive", "reference"].
    pub strategies: Vec<String>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Repeat count N for score averaging; 1 keeps score = label.
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    pub output_dir: PathBuf,
    /// Response cache (fixture-format JSONL). Absent means in-memory only.
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
}

fn default_workers() -> usize {
    1
}

fn default_repeat() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSection {
    pub mode: BackendMode,
    #[serde(flatten)]
    pub config: BackendConfig,
    /// Mock-oracle intensity threshold in [0, 255].
    #[serde(default = "default_mock_tau")]
    pub mock_tau: f64,
    /// Fixture file for replay mode and the record-fixture verb.
    #[serde(default)]
    pub fixture_path: Option<PathBuf>,
}

fn default_mock_tau() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessSection {
    pub max_dim: u32,
    pub resolution: u32,
    pub chart: ChartSpec,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let params = PreprocessParams::default();
        PreprocessSection {
            max_dim: params.max_dim,
            resolution: params.resolution,
            chart: params.chart,
        }
    }
}

impl PreprocessSection {
    pub fn params(&self) -> PreprocessParams {
        PreprocessParams {
            max_dim: self.max_dim,
            resolution: self.resolution,
            chart: self.chart.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptSection {
    /// Template file override; absent uses the bundled wording.
    pub template_path: Option<PathBuf>,
    /// Rules file override; absent uses the bundled per-category rules.
    pub rules_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub run: RunSection,
    pub backend: BackendSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub prompt: PromptSection,
    /// Keyword-list overrides for the parser's third stage.
    #[serde(default)]
    pub parser: KeywordConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::ConfigInvalid(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    /// Parses and orders the configured strategies by ladder level.
    pub fn strategies(&self) -> Result<Vec<PromptStrategy>, HarnessError> {
        if self.run.strategies.is_empty() {
            return Err(HarnessError::ConfigInvalid("strategy list must be non-empty".into()));
        }
        let mut strategies = Vec::with_capacity(self.run.strategies.len());
        for id in &self.run.strategies {
            let strategy: PromptStrategy = id
                .parse()
                .map_err(|e| HarnessError::ConfigInvalid(format!("bad strategy: {e}")))?;
            if !strategies.contains(&strategy) {
                strategies.push(strategy);
            }
        }
        strategies.sort();
        Ok(strategies)
    }

    /// Structural validation that does not need the dataset on disk.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |msg: String| Err(HarnessError::ConfigInvalid(msg));
        if self.run.workers < 1 {
            return invalid("workers must be >= 1".into());
        }
        if self.run.repeat < 1 {
            return invalid("repeat must be >= 1".into());
        }
        self.strategies()?;
        if let Some(limit) = self.dataset.sample_limit {
            if limit == 0 {
                return invalid("sample_limit must be >= 1 when present".into());
            }
        }
        if self.preprocess.max_dim < 64 {
            return invalid(format!("preprocess.max_dim must be >= 64, got {}", self.preprocess.max_dim));
        }
        if self.preprocess.resolution < 16 {
            return invalid(format!(
                "preprocess.resolution must be >= 16, got {}",
                self.preprocess.resolution
            ));
        }
        self.preprocess
            .chart
            .plot_area()
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        self.backend
            .config
            .validate()
            .map_err(HarnessError::ConfigInvalid)?;
        if !(0.0..=255.0).contains(&self.backend.mock_tau) {
            return invalid(format!("mock_tau must lie in [0, 255], got {}", self.backend.mock_tau));
        }
        match self.backend.mode {
            BackendMode::Replay => {
                if self.backend.fixture_path.is_none() {
                    return invalid("replay mode requires backend.fixture_path".into());
                }
            }
            BackendMode::Live => {
                if self.backend.endpoint_url().is_empty() {
                    return invalid("live mode requires backend.endpoint_url".into());
                }
            }
            BackendMode::Mock => {}
        }
        Ok(())
    }
}

impl BackendSection {
    fn endpoint_url(&self) -> &str {
        &self.config.endpoint_url
    }
}
