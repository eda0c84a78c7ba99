//! End-to-end orchestration: manifest -> preprocess -> prompt -> backend ->
//! parse -> metrics, with a shared response cache, bounded worker-pool
//! parallelism, and deterministic report emission.
//!
//! Per-sample failures (unparseable responses, transport errors after
//! retries) are logged and counted; a run aborts only on configuration
//! errors. Records are sorted before metric computation, so worker count
//! never affects report content.

mod config;

pub use config::{
    BackendMode, BackendSection, DatasetSection, PreprocessSection, PromptSection, RunConfig,
    RunSection,
};

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    Backend, BackendError, FixtureRecord, FixtureStore, LiveBackend, MockBackend, RecordingBackend,
    ReplayBackend,
};
use crate::dataset::{scan_layout, select_reference, DatasetError};
use crate::metrics::{per_category_report, MetricsError, MetricsReport};
use crate::parser::{parse_response_with, KeywordConfig};
use crate::preprocess::{preprocess_path, PreprocessError, PreprocessParams};
use crate::prompt::{PromptBundle, PromptError, PromptStrategy, PromptTemplate, RuleSet};
use crate::types::{CanonicalImage, DetectionResult, EvalRecord, Label, QuerySample, SampleSource};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("prompt assets: {0}")]
    Prompt(#[from] PromptError),
    #[error("backend setup: {0}")]
    Backend(#[from] BackendError),
}

/// Why one (strategy, sample) evaluation produced no record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Preprocess,
    Prompt,
    Backend,
    FixtureMiss,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub sample_id: String,
    pub category: String,
    pub strategy_id: String,
    pub kind: FailureKind,
    pub message: String,
}

/// Coverage accounting for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub attempted: usize,
    pub succeeded: usize,
    pub excluded: usize,
    pub unparseable: usize,
    pub backend_failures: usize,
    pub fixture_misses: usize,
    /// Actual backend invocations (cache misses).
    pub backend_calls: u64,
    pub cache_hits: u64,
}

/// Everything a benchmark run produces.
#[derive(Debug)]
pub struct RunOutput {
    /// Sorted by (strategy level, category, sample id).
    pub records: Vec<EvalRecord>,
    /// One report per strategy, in ladder order.
    pub reports: Vec<(PromptStrategy, MetricsReport)>,
    pub failures: Vec<ItemFailure>,
    pub summary: RunSummary,
    /// Files written under the output directory.
    pub written: Vec<PathBuf>,
}

/// Strategy-by-category accuracy matrix from an ablation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationMatrix {
    pub strategies: Vec<String>,
    pub categories: Vec<String>,
    /// `rows[category_index][strategy_index]`, None where a cell has no
    /// records.
    pub acc: Vec<Vec<Option<f64>>>,
}

impl AblationMatrix {
    /// CSV with strategies as columns and categories as rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category");
        for strategy in &self.strategies {
            out.push(',');
            out.push_str(strategy);
        }
        out.push('\n');
        for (category, row) in self.categories.iter().zip(&self.acc) {
            out.push_str(category);
            for cell in row {
                out.push(',');
                match cell {
                    Some(acc) => out.push_str(&format!("{acc:.6}")),
                    None => out.push_str("n/a"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Response cache keyed by request digest (plus a `#k` suffix for repeat
/// queries beyond the first). Backed by a fixture-format JSONL file when a
/// path is configured, so a cached run doubles as a regression fixture.
struct ResponseCache {
    store: Option<FixtureStore>,
    memory: Mutex<HashMap<String, String>>,
}

impl ResponseCache {
    fn open(path: Option<&Path>) -> Result<Self, BackendError> {
        Ok(ResponseCache {
            store: path.map(FixtureStore::open).transpose()?,
            memory: Mutex::new(HashMap::new()),
        })
    }

    fn get(&self, key: &str) -> Option<String> {
        if let Some(text) = self.memory.lock().unwrap().get(key) {
            return Some(text.clone());
        }
        self.store.as_ref().and_then(|s| s.get(key))
    }

    fn put(&self, key: String, text: String, backend_id: &str, model_name: &str) {
        if let Some(store) = &self.store {
            let result = store.insert(FixtureRecord {
                digest: key.clone(),
                text: text.clone(),
                backend_id: backend_id.to_string(),
                model_name: model_name.to_string(),
                timestamp: crate::backend::unix_timestamp(),
            });
            if let Err(e) = result {
                log::warn!("cache append failed: {e}");
            }
        }
        self.memory.lock().unwrap().insert(key, text);
    }
}

/// Runs `f` over the items on a bounded worker pool of the given size,
/// preserving input order. `workers == 1` (or building without the
/// `parallel` feature) takes the sequential path; results are identical
/// either way, only wall-clock time differs.
#[cfg(feature = "parallel")]
pub fn map_with_workers<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    if workers <= 1 {
        return items.into_iter().map(f).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool construction cannot fail");
    pool.install(|| items.into_par_iter().map(f).collect())
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_with_workers<T, R, F>(items: Vec<T>, _workers: usize, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

fn build_backend(section: &BackendSection) -> Result<Box<dyn Backend>, HarnessError> {
    match section.mode {
        BackendMode::Mock => Ok(Box::new(MockBackend::new(section.mock_tau))),
        BackendMode::Replay => {
            let path = section.fixture_path.as_ref().expect("validated");
            Ok(Box::new(ReplayBackend::open(
                path,
                &section.config.backend_id,
                &section.config.model_name,
            )?))
        }
        BackendMode::Live => Ok(Box::new(LiveBackend::new(section.config.clone())?)),
    }
}

struct InvocationCounter<'a> {
    inner: &'a dyn Backend,
    calls: AtomicU64,
}

impl<'a> InvocationCounter<'a> {
    fn query(&self, bundle: &PromptBundle) -> Result<crate::backend::BackendResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.query(bundle)
    }
}

/// Everything resolved once at run start and shared read-only by workers.
struct RunContext<'a> {
    template: PromptTemplate,
    rules: RuleSet,
    keywords: KeywordConfig,
    params: PreprocessParams,
    backend: InvocationCounter<'a>,
    backend_id: String,
    model_name: String,
    cache: ResponseCache,
    repeat: usize,
    cache_hits: AtomicU64,
}

impl<'a> RunContext<'a> {
    /// Cache-first text for one (bundle, repeat index): a hit skips the
    /// backend entirely.
    fn fetch_text(&self, bundle: &PromptBundle, repeat_idx: usize) -> Result<(String, bool), BackendError> {
        let digest = crate::backend::request_digest(&self.backend_id, &self.model_name, bundle);
        let key = if repeat_idx == 0 { digest } else { format!("{digest}#{repeat_idx}") };
        if let Some(text) = self.cache.get(&key) {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok((text, true));
        }
        let response = self.backend.query(bundle)?;
        self.cache.put(key, response.text.clone(), &self.backend_id, &self.model_name);
        Ok((response.text, false))
    }
}

type ItemResult = Result<EvalRecord, ItemFailure>;

fn evaluate_item(
    ctx: &RunContext,
    strategy: PromptStrategy,
    sample: &QuerySample,
    query_image: &CanonicalImage,
    reference: Option<&CanonicalImage>,
) -> ItemResult {
    let start = Instant::now();
    let fail = |kind: FailureKind, message: String| ItemFailure {
        sample_id: sample.id.clone(),
        category: sample.category.clone(),
        strategy_id: strategy.id().to_string(),
        kind,
        message,
    };

    let class_token = strategy.use_class().then(|| sample.category.as_str());
    let rules = if strategy.use_rules() {
        match ctx.rules.get(&sample.category) {
            Some(rules) => Some(rules),
            None => {
                return Err(fail(
                    FailureKind::Prompt,
                    format!("no normality rules for category {:?}", sample.category),
                ))
            }
        }
    } else {
        None
    };
    let bundle = ctx
        .template
        .build_prompt(strategy, query_image.clone(), class_token, rules.as_ref(), reference.cloned())
        .map_err(|e| fail(FailureKind::Prompt, e.to_string()))?;

    let mut labels = Vec::with_capacity(ctx.repeat);
    let mut first: Option<DetectionResult> = None;
    let mut all_cached = true;
    for repeat_idx in 0..ctx.repeat {
        let (text, cached) = ctx.fetch_text(&bundle, repeat_idx).map_err(|e| {
            let kind = match e {
                BackendError::FixtureMiss { .. } => FailureKind::FixtureMiss,
                _ => FailureKind::Backend,
            };
            fail(kind, e.to_string())
        })?;
        all_cached &= cached;
        let result = parse_response_with(&text, &ctx.keywords)
            .map_err(|e| fail(FailureKind::Unparseable, e.to_string()))?;
        labels.push(result.label);
        if first.is_none() {
            first = Some(result);
        }
    }
    let first = first.expect("repeat >= 1");
    let score = labels.iter().map(|l| l.as_f64()).sum::<f64>() / labels.len() as f64;
    let label = if ctx.repeat == 1 {
        first.label
    } else if score >= 0.5 {
        Label::Anomalous
    } else {
        Label::Normal
    };
    let prediction = DetectionResult {
        label,
        reasoning: first.reasoning,
        score,
        raw_response: first.raw_response,
        parse_path: first.parse_path,
    };
    let latency_ms = if all_cached { 0.0 } else { (start.elapsed().as_secs_f64() * 1e3).max(1e-6) };
    Ok(EvalRecord::new(
        sample.id.clone(),
        sample.category.clone(),
        strategy.id().to_string(),
        ctx.backend_id.clone(),
        prediction,
        sample.ground_truth.expect("dataset samples always carry ground truth"),
        latency_ms,
        all_cached,
    ))
}

/// Runs the full benchmark described by `config`: for every (strategy,
/// category, test sample) triple, preprocess, build the prompt, query the
/// backend cache-first, parse, and record. Emits the record log and one
/// report per strategy into the output directory.
pub fn run_benchmark(config: &RunConfig) -> Result<RunOutput, HarnessError> {
    let output = execute(config, None)?;
    Ok(output)
}

/// Benchmark pass per strategy sharing one cache, plus the strategy-by-
/// category accuracy matrix. Requires at least two configured strategies.
pub fn run_ablation(config: &RunConfig) -> Result<(RunOutput, AblationMatrix), HarnessError> {
    let strategies = config.strategies()?;
    if strategies.len() < 2 {
        return Err(HarnessError::ConfigInvalid(
            "ablation requires at least two strategies".into(),
        ));
    }
    let mut output = execute(config, None)?;
    let matrix = ablation_matrix(&output.records, &strategies);
    let path = config.run.output_dir.join("ablation.csv");
    write_file(&path, matrix.to_csv().as_bytes())?;
    output.written.push(path);
    Ok((output, matrix))
}

/// Re-runs `run_benchmark` with the backend wrapped in a recorder that
/// persists every (digest, response) pair to the configured fixture file.
pub fn record_fixture(config: &RunConfig) -> Result<RunOutput, HarnessError> {
    let fixture_path = config.backend.fixture_path.clone().ok_or_else(|| {
        HarnessError::ConfigInvalid("record-fixture requires backend.fixture_path".into())
    })?;
    execute(config, Some(&fixture_path))
}

fn execute(config: &RunConfig, record_to: Option<&Path>) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let strategies = config.strategies()?;

    let template = match &config.prompt.template_path {
        Some(path) => PromptTemplate::from_file(path)?,
        None => PromptTemplate::bundled(),
    };
    let rules = match &config.prompt.rules_path {
        Some(path) => RuleSet::from_file(path)?,
        None => RuleSet::bundled(),
    };

    let mut manifest = scan_layout(&config.dataset.root)?;
    if let Some(filter) = &config.dataset.categories {
        for name in filter {
            if manifest.category(name).is_none() {
                return Err(HarnessError::ConfigInvalid(format!(
                    "category {name:?} does not exist in the dataset"
                )));
            }
        }
        manifest = manifest.filtered(filter);
    }
    if let Some(limit) = config.dataset.sample_limit {
        manifest = manifest.limited(limit);
    }

    // rules must cover every category up front when any strategy needs them
    if strategies.iter().any(|s| s.use_rules()) {
        let missing: Vec<&str> = manifest
            .categories
            .iter()
            .filter(|c| rules.get(&c.name).is_none())
            .map(|c| c.name.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(HarnessError::ConfigInvalid(format!(
                "no normality rules for categories: {}",
                missing.join(", ")
            )));
        }
    }

    let backend: Box<dyn Backend> = {
        let base = build_backend(&config.backend)?;
        match record_to {
            Some(path) => Box::new(RecordingBackend::create(BoxedBackend(base), path)?),
            None => base,
        }
    };

    let params = config.preprocess.params();
    let ctx = RunContext {
        template,
        rules,
        keywords: config.parser.clone(),
        params: params.clone(),
        backend: InvocationCounter { inner: backend.as_ref(), calls: AtomicU64::new(0) },
        backend_id: config.backend.config.backend_id.clone(),
        model_name: config.backend.config.model_name.clone(),
        cache: ResponseCache::open(config.run.cache_path.as_deref())?,
        repeat: config.run.repeat,
        cache_hits: AtomicU64::new(0),
    };

    // phase 1: canonicalize every test sample once, shared across strategies
    let samples: Vec<QuerySample> = manifest
        .categories
        .iter()
        .flat_map(|c| manifest.query_samples(c))
        .collect();
    let preprocessed: Vec<Result<CanonicalImage, String>> = map_with_workers(
        samples.iter().collect(),
        config.run.workers,
        |sample: &QuerySample| {
            let SampleSource::Path(path) = &sample.source else {
                return Err("inline sources are not produced by dataset scans".to_string());
            };
            preprocess_path(path, &ctx.params).map_err(|e| e.to_string())
        },
    );
    let images: HashMap<&str, &Result<CanonicalImage, String>> = samples
        .iter()
        .zip(&preprocessed)
        .map(|(s, r)| (s.id.as_str(), r))
        .collect();

    // references, once per category, only when some strategy attaches them
    let mut references: HashMap<&str, Result<CanonicalImage, PreprocessError>> = HashMap::new();
    if strategies.iter().any(|s| s.use_reference()) {
        for category in &manifest.categories {
            let reference = select_reference(category);
            references.insert(category.name.as_str(), preprocess_path(reference, &params));
        }
    }

    // phase 2: evaluate every (strategy, sample) pair
    let items: Vec<(PromptStrategy, &QuerySample)> = strategies
        .iter()
        .flat_map(|&strategy| samples.iter().map(move |s| (strategy, s)))
        .collect();
    let attempted = items.len();
    let results: Vec<ItemResult> = map_with_workers(items, config.run.workers, |(strategy, sample)| {
        let fail = |kind: FailureKind, message: String| ItemFailure {
            sample_id: sample.id.clone(),
            category: sample.category.clone(),
            strategy_id: strategy.id().to_string(),
            kind,
            message,
        };
        let query_image = match images.get(sample.id.as_str()) {
            Some(Ok(image)) => image,
            Some(Err(message)) => return Err(fail(FailureKind::Preprocess, message.clone())),
            None => unreachable!("every sample was preprocessed"),
        };
        let reference = if strategy.use_reference() {
            match references.get(sample.category.as_str()) {
                Some(Ok(image)) => Some(image),
                Some(Err(e)) => {
                    return Err(fail(FailureKind::Preprocess, format!("reference: {e}")))
                }
                None => unreachable!("references were preprocessed for reference strategies"),
            }
        } else {
            None
        };
        evaluate_item(&ctx, strategy, sample, query_image, reference)
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(record) => records.push(record),
            Err(failure) => {
                log::warn!(
                    "excluded {} / {} / {}: {}",
                    failure.strategy_id,
                    failure.sample_id,
                    failure.kind_str(),
                    failure.message
                );
                failures.push(failure);
            }
        }
    }

    sort_records(&mut records);

    let summary = RunSummary {
        attempted,
        succeeded: records.len(),
        excluded: failures.len(),
        unparseable: failures.iter().filter(|f| f.kind == FailureKind::Unparseable).count(),
        backend_failures: failures
            .iter()
            .filter(|f| matches!(f.kind, FailureKind::Backend | FailureKind::FixtureMiss))
            .count(),
        fixture_misses: failures.iter().filter(|f| f.kind == FailureKind::FixtureMiss).count(),
        backend_calls: ctx.backend.calls.load(Ordering::Relaxed),
        cache_hits: ctx.cache_hits.load(Ordering::Relaxed),
    };

    let reports = build_reports(&records, &failures, &strategies)?;

    let mut written = Vec::new();
    let out_dir = &config.run.output_dir;
    let records_path = out_dir.join("records.jsonl");
    write_file(&records_path, records_jsonl(&records).as_bytes())?;
    written.push(records_path);
    for (strategy, report) in &reports {
        written.extend(write_report_files(out_dir, *strategy, report, &config.backend.config.backend_id)?);
    }
    let summary_path = out_dir.join("summary.json");
    write_file(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("summary serialization cannot fail").as_bytes(),
    )?;
    written.push(summary_path);

    Ok(RunOutput { records, reports, failures, summary, written })
}

impl ItemFailure {
    fn kind_str(&self) -> &'static str {
        match self.kind {
            FailureKind::Preprocess => "preprocess",
            FailureKind::Prompt => "prompt",
            FailureKind::Backend => "backend",
            FailureKind::FixtureMiss => "fixture_miss",
            FailureKind::Unparseable => "unparseable",
        }
    }
}

/// Boxed-backend adapter so the recording wrapper can hold any backend.
struct BoxedBackend(Box<dyn Backend>);

impl Backend for BoxedBackend {
    fn backend_id(&self) -> &str {
        self.0.backend_id()
    }

    fn model_name(&self) -> &str {
        self.0.model_name()
    }

    fn query(&self, bundle: &PromptBundle) -> Result<crate::backend::BackendResponse, BackendError> {
        self.0.query(bundle)
    }
}

fn sort_records(records: &mut [EvalRecord]) {
    records.sort_by(|a, b| {
        let level = |r: &EvalRecord| {
            r.strategy_id.parse::<PromptStrategy>().map(|s| s as u8).unwrap_or(u8::MAX)
        };
        (level(a), &a.category, &a.sample_id).cmp(&(level(b), &b.category, &b.sample_id))
    });
}

fn records_jsonl(records: &[EvalRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Parses a records.jsonl file back into memory.
pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), source: e })?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EvalRecord = serde_json::from_str(line).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad record line {}: {e}", i + 1),
            ),
        })?;
        records.push(record);
    }
    Ok(records)
}

fn build_reports(
    records: &[EvalRecord],
    failures: &[ItemFailure],
    strategies: &[PromptStrategy],
) -> Result<Vec<(PromptStrategy, MetricsReport)>, HarnessError> {
    let mut reports = Vec::new();
    for &strategy in strategies {
        let subset: Vec<EvalRecord> = records
            .iter()
            .filter(|r| r.strategy_id == strategy.id())
            .cloned()
            .collect();
        if subset.is_empty() {
            continue;
        }
        let mut unparseable = BTreeMap::new();
        for failure in failures {
            if failure.strategy_id == strategy.id() && failure.kind == FailureKind::Unparseable {
                *unparseable.entry(failure.category.clone()).or_insert(0) += 1;
            }
        }
        reports.push((strategy, per_category_report(&subset, &unparseable)?));
    }
    Ok(reports)
}

/// Report emission for a (possibly mixed-strategy) record set: per strategy
/// in ladder order, writes `report_<strategy>.csv` and/or `.md` into
/// `out_dir`. Output is deterministic for identical records.
pub fn emit_report(
    records: &[EvalRecord],
    format: ReportFormat,
    out_dir: &Path,
    backend_label: &str,
) -> Result<Vec<PathBuf>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Metrics(MetricsError::Empty));
    }
    let mut strategies: Vec<PromptStrategy> = Vec::new();
    for record in records {
        if let Ok(strategy) = record.strategy_id.parse::<PromptStrategy>() {
            if !strategies.contains(&strategy) {
                strategies.push(strategy);
            }
        }
    }
    strategies.sort();
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let reports = build_reports(&sorted, &[], &strategies)?;
    let mut written = Vec::new();
    for (strategy, report) in &reports {
        written.extend(write_report_named(out_dir, *strategy, report, backend_label, format)?);
    }
    Ok(written)
}

/// Which files `emit_report` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Both,
}

fn write_report_files(
    out_dir: &Path,
    strategy: PromptStrategy,
    report: &MetricsReport,
    backend_label: &str,
) -> Result<Vec<PathBuf>, HarnessError> {
    write_report_named(out_dir, strategy, report, backend_label, ReportFormat::Both)
}

fn write_report_named(
    out_dir: &Path,
    strategy: PromptStrategy,
    report: &MetricsReport,
    backend_label: &str,
    format: ReportFormat,
) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        let path = out_dir.join(format!("report_{}.csv", strategy.id()));
        write_file(&path, report.to_csv().as_bytes())?;
        written.push(path);
    }
    if matches!(format, ReportFormat::Markdown | ReportFormat::Both) {
        let title = format!("Anomaly detection report - backend {backend_label} - strategy {}", strategy.id());
        let path = out_dir.join(format!("report_{}.md", strategy.id()));
        write_file(&path, report.to_markdown(&title).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn ablation_matrix(records: &[EvalRecord], strategies: &[PromptStrategy]) -> AblationMatrix {
    let mut categories: Vec<String> = records.iter().map(|r| r.category.clone()).collect();
    categories.sort();
    categories.dedup();
    let acc = categories
        .iter()
        .map(|category| {
            strategies
                .iter()
                .map(|strategy| {
                    let (mut correct, mut total) = (0usize, 0usize);
                    for record in records {
                        if record.category == *category && record.strategy_id == strategy.id() {
                            total += 1;
                            if record.prediction.label == record.ground_truth {
                                correct += 1;
                            }
                        }
                    }
                    (total > 0).then(|| correct as f64 / total as f64)
                })
                .collect()
        })
        .collect();
    AblationMatrix {
        strategies: strategies.iter().map(|s| s.id().to_string()).collect(),
        categories,
        acc,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| HarnessError::Io { path: parent.display().to_string(), source: e })?;
    }
    std::fs::write(path, bytes)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), source: e })
}
