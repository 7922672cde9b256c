//! Point-estimate metrics computed exactly from confusion-matrix counts.
//!
//! Metrics whose denominator is zero are undefined and come back as `None`.
//! The one exception is F1 with precision and recall both zero, which is
//! `Some(0.0)`.

use std::fmt;

use crate::confusion::ConfusionMatrix;
use crate::error::{param, Result};

/// Identifies one of the metrics reported per classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    /// Overall accuracy, identical to micro-averaged F1.
    Accuracy,
    MacroF1,
    MacroPrecision,
    MacroRecall,
    MacroSpecificity,
    Precision(usize),
    Recall(usize),
    F1(usize),
    Specificity(usize),
}

impl MetricId {
    /// All `4M + 5` metrics in reporting order: accuracy, the macro averages,
    /// then precision/recall/F1/specificity for each class.
    pub fn all(num_classes: usize) -> Vec<MetricId> {
        let mut ids = vec![
            MetricId::Accuracy,
            MetricId::MacroF1,
            MetricId::MacroPrecision,
            MetricId::MacroRecall,
            MetricId::MacroSpecificity,
        ];
        for j in 0..num_classes {
            ids.extend([
                MetricId::Precision(j),
                MetricId::Recall(j),
                MetricId::F1(j),
                MetricId::Specificity(j),
            ]);
        }
        ids
    }

    pub fn class(&self) -> Option<usize> {
        match *self {
            MetricId::Precision(j)
            | MetricId::Recall(j)
            | MetricId::F1(j)
            | MetricId::Specificity(j) => Some(j),
            _ => None,
        }
    }

    /// Human-readable row name, e.g. `Covid-19 F1-Score`.
    pub fn display_name(&self, labels: &[String]) -> String {
        let label = |j: usize| labels.get(j).cloned().unwrap_or_else(|| j.to_string());
        match *self {
            MetricId::Accuracy => "Mean Accuracy or miF1".to_string(),
            MetricId::MacroF1 => "Macro-averaged F1-Score".to_string(),
            MetricId::MacroPrecision => "Macro-averaged Precision".to_string(),
            MetricId::MacroRecall => "Macro-averaged Recall".to_string(),
            MetricId::MacroSpecificity => "Macro-averaged Specificity".to_string(),
            MetricId::Precision(j) => format!("{} Precision", label(j)),
            MetricId::Recall(j) => format!("{} Recall", label(j)),
            MetricId::F1(j) => format!("{} F1-Score", label(j)),
            MetricId::Specificity(j) => format!("{} Specificity", label(j)),
        }
    }

    /// Short machine key, e.g. `accuracy`, `macro_f1`, `recall_2`.
    pub fn key(&self) -> String {
        match *self {
            MetricId::Accuracy => "accuracy".to_string(),
            MetricId::MacroF1 => "macro_f1".to_string(),
            MetricId::MacroPrecision => "macro_precision".to_string(),
            MetricId::MacroRecall => "macro_recall".to_string(),
            MetricId::MacroSpecificity => "macro_specificity".to_string(),
            MetricId::Precision(j) => format!("precision_{j}"),
            MetricId::Recall(j) => format!("recall_{j}"),
            MetricId::F1(j) => format!("f1_{j}"),
            MetricId::Specificity(j) => format!("specificity_{j}"),
        }
    }

    /// Inverse of [`MetricId::key`]. `mif1` is accepted as an alias of
    /// `accuracy`.
    pub fn parse_key(key: &str, num_classes: usize) -> Result<MetricId> {
        let simple = match key {
            "accuracy" | "mif1" => Some(MetricId::Accuracy),
            "macro_f1" => Some(MetricId::MacroF1),
            "macro_precision" => Some(MetricId::MacroPrecision),
            "macro_recall" => Some(MetricId::MacroRecall),
            "macro_specificity" => Some(MetricId::MacroSpecificity),
            _ => None,
        };
        if let Some(id) = simple {
            return Ok(id);
        }
        let Some((kind, class)) = key.rsplit_once('_') else {
            return param(format!("unknown metric '{key}'"));
        };
        let j: usize = match class.parse() {
            Ok(j) if j < num_classes => j,
            _ => return param(format!("bad class index in metric '{key}'")),
        };
        match kind {
            "precision" => Ok(MetricId::Precision(j)),
            "recall" => Ok(MetricId::Recall(j)),
            "f1" => Ok(MetricId::F1(j)),
            "specificity" => Ok(MetricId::Specificity(j)),
            _ => param(format!("unknown metric '{key}'")),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn harmonic_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// `tp / (tp + fp)`; `None` when class `j` is never predicted.
pub fn class_precision(cm: &ConfusionMatrix, j: usize) -> Option<f64> {
    ratio(cm.get(j, j), cm.column_sum(j))
}

/// `tp / (tp + fn)`; `None` when class `j` has no samples.
pub fn class_recall(cm: &ConfusionMatrix, j: usize) -> Option<f64> {
    ratio(cm.get(j, j), cm.row_sum(j))
}

pub fn class_f1(cm: &ConfusionMatrix, j: usize) -> Option<f64> {
    Some(harmonic_f1(class_precision(cm, j)?, class_recall(cm, j)?))
}

/// `tn / (tn + fp)` where negatives are all samples outside true class `j`.
pub fn class_specificity(cm: &ConfusionMatrix, j: usize) -> Option<f64> {
    let m = cm.num_classes();
    let tn: u64 = (0..m)
        .filter(|&u| u != j)
        .flat_map(|u| (0..m).filter(move |&v| v != j).map(move |v| (u, v)))
        .map(|(u, v)| cm.get(u, v))
        .sum();
    ratio(tn, cm.total() - cm.row_sum(j))
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    cm.trace() as f64 / cm.total() as f64
}

fn macro_mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    Some(sum / n as f64)
}

/// Point value of any metric.
pub fn point_value(cm: &ConfusionMatrix, id: MetricId) -> Option<f64> {
    let m = cm.num_classes();
    match id {
        MetricId::Accuracy => Some(accuracy(cm)),
        MetricId::MacroF1 => macro_mean((0..m).map(|j| class_f1(cm, j))),
        MetricId::MacroPrecision => macro_mean((0..m).map(|j| class_precision(cm, j))),
        MetricId::MacroRecall => macro_mean((0..m).map(|j| class_recall(cm, j))),
        MetricId::MacroSpecificity => macro_mean((0..m).map(|j| class_specificity(cm, j))),
        MetricId::Precision(j) => class_precision(cm, j),
        MetricId::Recall(j) => class_recall(cm, j),
        MetricId::F1(j) => class_f1(cm, j),
        MetricId::Specificity(j) => class_specificity(cm, j),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
}

/// Every point metric for one confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub labels: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
    pub macro_specificity: Option<f64>,
    pub accuracy: f64,
}

impl MetricReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let m = cm.num_classes();
        let per_class = (0..m)
            .map(|j| ClassMetrics {
                precision: class_precision(cm, j),
                recall: class_recall(cm, j),
                f1: class_f1(cm, j),
                specificity: class_specificity(cm, j),
            })
            .collect::<Vec<_>>();
        MetricReport {
            labels: cm.labels().to_vec(),
            macro_precision: macro_mean(per_class.iter().map(|c| c.precision)),
            macro_recall: macro_mean(per_class.iter().map(|c| c.recall)),
            macro_f1: macro_mean(per_class.iter().map(|c| c.f1)),
            macro_specificity: macro_mean(per_class.iter().map(|c| c.specificity)),
            accuracy: accuracy(cm),
            per_class,
        }
    }

    pub fn get(&self, id: MetricId) -> Option<f64> {
        match id {
            MetricId::Accuracy => Some(self.accuracy),
            MetricId::MacroF1 => self.macro_f1,
            MetricId::MacroPrecision => self.macro_precision,
            MetricId::MacroRecall => self.macro_recall,
            MetricId::MacroSpecificity => self.macro_specificity,
            MetricId::Precision(j) => self.per_class.get(j)?.precision,
            MetricId::Recall(j) => self.per_class.get(j)?.recall,
            MetricId::F1(j) => self.per_class.get(j)?.f1,
            MetricId::Specificity(j) => self.per_class.get(j)?.specificity,
        }
    }

    /// `(metric, value)` pairs in reporting order.
    pub fn rows(&self) -> Vec<(MetricId, Option<f64>)> {
        MetricId::all(self.labels.len())
            .into_iter()
            .map(|id| (id, self.get(id)))
            .collect()
    }
}

/// Full report; shorthand for [`MetricReport::from_confusion`].
pub fn full_report(cm: &ConfusionMatrix) -> MetricReport {
    MetricReport::from_confusion(cm)
}

/// Rounds half-up to 3 decimals and drops trailing zeros, keeping at least
/// one decimal digit (`0.850` → `0.85`, `1` → `1.0`).
pub fn format_3dp(value: f64) -> String {
    // Nudge absorbs binary representation error on exact halves like 0.7625.
    let scaled = (value * 1000.0 + 1e-9).abs();
    let rounded = (scaled + 0.5).floor() as u64;
    let sign = if value < 0.0 && rounded != 0 { "-" } else { "" };
    let int = rounded / 1000;
    let mut frac = format!("{:03}", rounded % 1000);
    while frac.len() > 1 && frac.ends_with('0') {
        frac.pop();
    }
    format!("{sign}{int}.{frac}")
}
