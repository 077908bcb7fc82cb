//! Confusion matrices, the four classification metrics and comparison
//! against published reference rows.
//!
//! The positive class is label 1 (sarcastic / hate). Precision, recall and
//! F1 always refer to it.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Task;

const REFERENCE_TABLES: &str = include_str!("../data/reference_tables.tsv");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("prediction and gold lists differ in length ({preds} vs {golds})")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("no examples to evaluate")]
    Empty,
    #[error("label {0} is not binary")]
    BadLabel(u8),
    #[error("no reference row for task {task} and model {model:?}")]
    UnknownReference { task: String, model: String },
    #[error("reference table line {line}: {message}")]
    BadReference { line: usize, message: String },
    #[error("bad report record: {0}")]
    BadRecord(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, pred: u8, gold: u8) {
        match (pred, gold) {
            (1, 1) => self.tp += 1,
            (1, _) => self.fp += 1,
            (_, 1) => self.fn_ += 1,
            _ => self.tn += 1,
        }
    }
}

pub fn confusion(preds: &[u8], golds: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &g) in preds.iter().zip(golds) {
        if p > 1 {
            return Err(EvalError::BadLabel(p));
        }
        if g > 1 {
            return Err(EvalError::BadLabel(g));
        }
        cm.add(p, g);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Set when any zero denominator forced a metric to 0.
    pub degenerate: bool,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    if precision + recall == 0.0 {
        degenerate = true;
    }
    Ok(Metrics { precision, recall, f1: f1_score(precision, recall), accuracy, degenerate })
}

/// Majority label of `train` (ties go to 0) applied to every item of
/// `golds`.
pub fn majority_baseline(train: &[u8], golds: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    let positives = train.iter().filter(|&&l| l == 1).count();
    let label = u8::from(positives * 2 > train.len());
    confusion(&vec![label; golds.len()], golds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    #[serde(default)]
    pub dataset: String,
    #[serde(default)]
    pub variant: String,
    /// Which part was evaluated (e.g. "test").
    #[serde(default)]
    pub split: String,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default)]
    pub cm: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    #[serde(default)]
    pub degenerate: bool,
    /// Accuracy of predicting the training majority class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majority_accuracy: Option<f64>,
}

impl EvalReport {
    pub fn new(
        model: impl Into<String>,
        dataset: impl Into<String>,
        variant: impl Into<String>,
        split: impl Into<String>,
        split_seed: u64,
        cm: ConfusionMatrix,
    ) -> Result<EvalReport, EvalError> {
        let m = metrics(&cm)?;
        Ok(EvalReport {
            model: model.into(),
            dataset: dataset.into(),
            variant: variant.into(),
            split: split.into(),
            split_seed,
            cm,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            accuracy: m.accuracy,
            degenerate: m.degenerate,
            majority_accuracy: None,
        })
    }

    /// One-line record in the canonical record encoding.
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("report serialization is infallible")
    }

    /// Parses a record. Missing confusion counts are accepted so that
    /// externally produced metrics files can be compared directly.
    pub fn from_record(line: &str) -> Result<EvalReport, EvalError> {
        serde_json::from_str(line).map_err(|e| EvalError::BadRecord(e.to_string()))
    }
}

/// Parses every non-empty line of a report file.
pub fn read_reports(src: &str) -> Result<Vec<EvalReport>, EvalError> {
    src.lines().filter(|l| !l.trim().is_empty()).map(EvalReport::from_record).collect()
}

/// Human-readable table; figures rounded to 3 decimals, accuracy to 2
/// decimals of a percent.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str("# positive class = label 1 (sarcastic / hate); P/R/F1 refer to it\n");
    let _ = writeln!(
        out,
        "{:<16} {:<14} {:<13} {:<6} {:>9} {:>9} {:>7} {:>6} {:>9}",
        "model", "dataset", "variant", "split", "accuracy", "precision", "recall", "f1", "majority"
    );
    for r in reports {
        let majority = r.majority_accuracy.map_or_else(|| "-".to_string(), |m| format!("{:.2}%", m * 100.0));
        let _ = writeln!(
            out,
            "{:<16} {:<14} {:<13} {:<6} {:>8.2}% {:>9.3} {:>7.3} {:>6.3} {:>9}",
            r.model,
            r.dataset,
            r.variant,
            r.split,
            r.accuracy * 100.0,
            r.precision,
            r.recall,
            r.f1,
            majority
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub task: Task,
    pub model: String,
    /// Fraction in [0, 1] (the table lists percent).
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ReferenceRow {
    /// Whether the stated F1 is reachable from some precision and recall
    /// that round to the stated 3-decimal values.
    pub fn f1_consistent(&self) -> bool {
        let half = 0.0005;
        let lo = f1_score(self.precision - half, self.recall - half);
        let hi = f1_score(self.precision + half, self.recall + half);
        self.f1 + half >= lo && self.f1 - half <= hi
    }
}

pub fn parse_reference_table(src: &str) -> Result<Vec<ReferenceRow>, EvalError> {
    let mut rows = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(EvalError::BadReference { line: line_no, message: format!("expected 6 fields, got {}", f.len()) });
        }
        let task = Task::from_str(f[0]).map_err(|m| EvalError::BadReference { line: line_no, message: m })?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| EvalError::BadReference { line: line_no, message: format!("{s:?}: {e}") })
        };
        rows.push(ReferenceRow {
            task,
            model: f[1].to_string(),
            accuracy: num(f[2])? / 100.0,
            precision: num(f[3])?,
            recall: num(f[4])?,
            f1: num(f[5])?,
        });
    }
    Ok(rows)
}

/// The shipped reference rows.
pub fn reference_table() -> Vec<ReferenceRow> {
    parse_reference_table(REFERENCE_TABLES).expect("bundled reference table is valid")
}

pub fn reference_row(task: Task, model: &str) -> Result<ReferenceRow, EvalError> {
    reference_table()
        .into_iter()
        .find(|r| r.task == task && r.model.eq_ignore_ascii_case(model))
        .ok_or_else(|| EvalError::UnknownReference { task: task.as_str().to_string(), model: model.to_string() })
}

/// Relative change `(a - b) / b`.
pub fn relative_delta(a: f64, b: f64) -> f64 {
    (a - b) / b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model: String,
    pub reference_model: String,
    pub task: Task,
    pub f1: f64,
    pub reference_f1: f64,
    /// (f1 - reference_f1) / reference_f1
    pub relative_f1: f64,
    pub relative_precision: f64,
    pub relative_recall: f64,
    pub relative_accuracy: f64,
}

pub fn compare(report: &EvalReport, reference: &ReferenceRow) -> Comparison {
    Comparison {
        model: report.model.clone(),
        reference_model: reference.model.clone(),
        task: reference.task,
        f1: report.f1,
        reference_f1: reference.f1,
        relative_f1: relative_delta(report.f1, reference.f1),
        relative_precision: relative_delta(report.precision, reference.precision),
        relative_recall: relative_delta(report.recall, reference.recall),
        relative_accuracy: relative_delta(report.accuracy, reference.accuracy),
    }
}

/// Report view of a reference row, for comparing published rows with each
/// other.
pub fn reference_as_report(row: &ReferenceRow) -> EvalReport {
    EvalReport {
        model: row.model.clone(),
        dataset: row.task.as_str().to_string(),
        variant: "published".into(),
        split: "test".into(),
        split_seed: 0,
        cm: ConfusionMatrix::default(),
        precision: row.precision,
        recall: row.recall,
        f1: row.f1,
        accuracy: row.accuracy,
        degenerate: false,
        majority_accuracy: None,
    }
}
