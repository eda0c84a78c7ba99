//! ACC / AUROC / AUPR over evaluation records, with explicit handling of
//! tied scores and degenerate single-class inputs.
//!
//! Binary scores (score = label) make ties the common case here, so tie
//! handling is fixed rather than left to chance: AUROC groups tied scores
//! into single threshold steps (trapezoids give each tie half credit, which
//! matches the Mann-Whitney statistic exactly), and AUPR processes a tied
//! block as one threshold whose precision counts the entire block.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{EvalRecord, Label};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction and label lists differ in length ({preds} vs {labels})")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("metric input must be non-empty")]
    Empty,
}

/// A metric value or the sentinel for "the defining curve does not exist"
/// (single-class input). Kept as a first-class value so averages and reports
/// cannot silently absorb degenerate categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum MetricValue {
    Defined(f64),
    Undefined(UndefinedTag),
}

/// Serialization tag for [`MetricValue::Undefined`]; renders as `"n/a"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UndefinedTag {
    #[serde(rename = "n/a")]
    NotAvailable,
}

pub const UNDEFINED: MetricValue = MetricValue::Undefined(UndefinedTag::NotAvailable);

impl MetricValue {
    pub fn defined(self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(v),
            MetricValue::Undefined(_) => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        matches!(self, MetricValue::Undefined(_))
    }
}

impl From<f64> for MetricValue {
    fn from(v: f64) -> Self {
        MetricValue::Defined(v)
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Defined(v) => {
                if let Some(prec) = f.precision() {
                    write!(f, "{v:.prec$}")
                } else {
                    write!(f, "{v}")
                }
            }
            MetricValue::Undefined(_) => f.write_str("n/a"),
        }
    }
}

/// Score/label pairs feeding the threshold curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    pairs: Vec<(f64, Label)>,
}

impl ScoredLabels {
    pub fn new(pairs: Vec<(f64, Label)>) -> Result<Self, MetricsError> {
        if pairs.is_empty() {
            return Err(MetricsError::Empty);
        }
        Ok(ScoredLabels { pairs })
    }

    pub fn pairs(&self) -> &[(f64, Label)] {
        &self.pairs
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|(_, l)| *l == Label::Anomalous).count()
    }

    pub fn negatives(&self) -> usize {
        self.pairs.len() - self.positives()
    }

    /// Pairs sorted by descending score with ties grouped: returns, per
    /// distinct score, the number of positives and negatives at that score.
    fn descending_tie_blocks(&self) -> Vec<(f64, usize, usize)> {
        let mut sorted: Vec<(f64, Label)> = self.pairs.clone();
        sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores must not be NaN"));
        let mut blocks: Vec<(f64, usize, usize)> = Vec::new();
        for (score, label) in sorted {
            match blocks.last_mut() {
                Some((s, pos, neg)) if *s == score => {
                    if label == Label::Anomalous {
                        *pos += 1;
                    } else {
                        *neg += 1;
                    }
                }
                _ => {
                    let (pos, neg) = if label == Label::Anomalous { (1, 0) } else { (0, 1) };
                    blocks.push((score, pos, neg));
                }
            }
        }
        blocks
    }
}

/// Ratio of correctly predicted instances, (TP + TN) / N.
pub fn accuracy(preds: &[Label], labels: &[Label]) -> Result<f64, MetricsError> {
    if preds.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { preds: preds.len(), labels: labels.len() });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Area under the ROC curve via the trapezoidal rule with tied scores grouped
/// into single threshold steps. Equals the Mann-Whitney statistic (fraction
/// of (positive, negative) pairs ranked correctly, ties counted half).
/// Undefined when either class is absent.
pub fn auroc(data: &ScoredLabels) -> MetricValue {
    let pos = data.positives();
    let neg = data.negatives();
    if pos == 0 || neg == 0 {
        return UNDEFINED;
    }
    let (pos_f, neg_f) = (pos as f64, neg as f64);
    let mut area = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_tpr = 0.0;
    let mut prev_fpr = 0.0;
    for (_, block_pos, block_neg) in data.descending_tie_blocks() {
        tp += block_pos;
        fp += block_neg;
        let tpr = tp as f64 / pos_f;
        let fpr = fp as f64 / neg_f;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    MetricValue::Defined(area)
}

/// Area under the precision-recall curve in the average-precision
/// formulation: the sum over descending-score threshold blocks of
/// recall-gain times precision at that threshold, where a tied block is one
/// threshold and its precision counts the entire block. Undefined when no
/// positive exists.
pub fn aupr(data: &ScoredLabels) -> MetricValue {
    let pos = data.positives();
    if pos == 0 {
        return UNDEFINED;
    }
    let pos_f = pos as f64;
    let mut area = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut prev_recall = 0.0;
    for (_, block_pos, block_neg) in data.descending_tie_blocks() {
        tp += block_pos;
        seen += block_pos + block_neg;
        let recall = tp as f64 / pos_f;
        let precision = tp as f64 / seen as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    MetricValue::Defined(area)
}

/// One row of a metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub category: String,
    pub acc: f64,
    pub auroc: MetricValue,
    pub aupr: MetricValue,
    pub n: usize,
    pub unparseable: usize,
}

/// Per-category ACC/AUROC/AUPR rows plus an unweighted average row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
    pub average: ReportRow,
    /// Categories excluded from the average of a metric because the metric
    /// was undefined there, one note per affected metric.
    pub notes: Vec<String>,
}

/// Groups records by category and emits one row per category plus an
/// unweighted average row. Undefined cells are excluded from that metric's
/// average and the exclusion is noted. `unparseable` carries the per-category
/// tally of responses that failed all parsing stages (those have no record).
pub fn per_category_report(
    records: &[EvalRecord],
    unparseable: &BTreeMap<String, usize>,
) -> Result<MetricsReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut by_category: BTreeMap<&str, Vec<&EvalRecord>> = BTreeMap::new();
    for rec in records {
        by_category.entry(rec.category.as_str()).or_default().push(rec);
    }

    let mut rows = Vec::with_capacity(by_category.len());
    for (category, recs) in &by_category {
        let preds: Vec<Label> = recs.iter().map(|r| r.prediction.label).collect();
        let labels: Vec<Label> = recs.iter().map(|r| r.ground_truth).collect();
        let scored = ScoredLabels::new(
            recs.iter().map(|r| (r.prediction.score, r.ground_truth)).collect(),
        )?;
        rows.push(ReportRow {
            category: category.to_string(),
            acc: accuracy(&preds, &labels)?,
            auroc: auroc(&scored),
            aupr: aupr(&scored),
            n: recs.len(),
            unparseable: unparseable.get(*category).copied().unwrap_or(0),
        });
    }

    let mut notes = Vec::new();
    let average = average_row(&rows, &mut notes);
    Ok(MetricsReport { rows, average, notes })
}

fn average_row(rows: &[ReportRow], notes: &mut Vec<String>) -> ReportRow {
    let acc = rows.iter().map(|r| r.acc).sum::<f64>() / rows.len() as f64;
    let mut avg_of = |metric: &str, get: fn(&ReportRow) -> MetricValue| -> MetricValue {
        let defined: Vec<f64> = rows.iter().filter_map(|r| get(r).defined()).collect();
        let excluded: Vec<&str> = rows
            .iter()
            .filter(|r| get(r).is_undefined())
            .map(|r| r.category.as_str())
            .collect();
        if !excluded.is_empty() {
            notes.push(format!(
                "{metric} average excludes {} undefined categor{}: {}",
                excluded.len(),
                if excluded.len() == 1 { "y" } else { "ies" },
                excluded.join(", ")
            ));
        }
        if defined.is_empty() {
            UNDEFINED
        } else {
            MetricValue::Defined(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    };
    ReportRow {
        category: "average".to_string(),
        acc,
        auroc: avg_of("AUROC", |r| r.auroc),
        aupr: avg_of("AUPR", |r| r.aupr),
        n: rows.iter().map(|r| r.n).sum(),
        unparseable: rows.iter().map(|r| r.unparseable).sum(),
    }
}

impl MetricsReport {
    /// CSV export with columns category, acc, auroc, aupr, n, unparseable.
    /// Undefined metrics render as "n/a".
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,acc,auroc,aupr,n,unparseable\n");
        for row in self.rows.iter().chain(std::iter::once(&self.average)) {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{},{}\n",
                row.category, row.acc, row.auroc, row.aupr, row.n, row.unparseable
            ));
        }
        out
    }

    /// Markdown table mirroring the per-category benchmark layout.
    pub fn to_markdown(&self, title: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {title}\n\n"));
        out.push_str(
            "Scores are derived from binary labels (score = label unless repeat \
             averaging is configured), so AUROC/AUPR reflect that derivation.\n",
        );
        for note in &self.notes {
            out.push_str(&format!("{note}.\n"));
        }
        out.push('\n');
        out.push_str("| Category | ACC | AUROC | AUPR |\n");
        out.push_str("|---|---|---|---|\n");
        for row in self.rows.iter().chain(std::iter::once(&self.average)) {
            out.push_str(&format!(
                "| {} | {:.3} | {:.3} | {:.3} |\n",
                row.category, row.acc, row.auroc, row.aupr
            ));
        }
        out
    }
}
