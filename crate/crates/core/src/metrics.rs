//! Classification quality indicators: confusion matrix, per-class
//! precision/recall/F1 with support, accuracy, and macro / support-weighted
//! aggregates, plus a fixed-width text report and a key-value export.
//!
//! Conventions: `counts[i][j]` is the number of samples of true class `i`
//! predicted as class `j`; multiclass accuracy is `trace / total`; a class
//! whose precision or recall denominator is zero scores 0 for the undefined
//! indicator and is flagged as degenerate rather than poisoning aggregates
//! with NaN.

use std::fmt::Write as _;

/// Square matrix of prediction counts over a fixed class list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<u16>,
    counts: Vec<Vec<u64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("label sequences must be non-empty and equal-length (got {truth} and {predicted})")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {0} is not in the class list")]
    UnknownClass(u16),
    #[error("class {0} appears twice in the class list")]
    DuplicateClass(u16),
    #[error("class list is empty")]
    EmptyClassList,
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
    #[error("expected {expected} class names, got {got}")]
    NameCountMismatch { expected: usize, got: usize },
}

impl ConfusionMatrix {
    /// Wraps pre-counted data; `counts[i][j]` = true class `i`, predicted `j`.
    pub fn new(classes: Vec<u16>, counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        if classes.is_empty() {
            return Err(MetricsError::EmptyClassList);
        }
        for (i, &c) in classes.iter().enumerate() {
            if classes[..i].contains(&c) {
                return Err(MetricsError::DuplicateClass(c));
            }
        }
        assert_eq!(counts.len(), classes.len(), "count rows must match class count");
        for row in &counts {
            assert_eq!(row.len(), classes.len(), "count matrix must be square");
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn classes(&self) -> &[u16] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of samples whose true class is `classes()[i]`.
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }
}

/// Tallies a confusion matrix from aligned truth/prediction sequences.
pub fn confusion(
    truth: &[u16],
    predicted: &[u16],
    classes: &[u16],
) -> Result<ConfusionMatrix, MetricsError> {
    if truth.is_empty() || truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    let matrix = ConfusionMatrix::new(classes.to_vec(), vec![vec![0; classes.len()]; classes.len()])?;
    let mut counts = matrix.counts;
    let index = |label: u16| {
        classes.iter().position(|&c| c == label).ok_or(MetricsError::UnknownClass(label))
    };
    for (&t, &p) in truth.iter().zip(predicted) {
        counts[index(t)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix { classes: matrix.classes, counts })
}

/// Indicators for one class, treated one-vs-rest.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class: u16,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// True when precision or recall had a zero denominator and the 0/0 -> 0
    /// convention was applied.
    pub degenerate: bool,
}

/// Full evaluation summary derived from one confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub total: u64,
}

/// Computes per-class and aggregate indicators from a confusion matrix.
pub fn report(matrix: &ConfusionMatrix) -> Result<ClassReport, MetricsError> {
    let total = matrix.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let k = matrix.classes.len();
    let mut per_class = Vec::with_capacity(k);
    let mut trace = 0u64;
    for i in 0..k {
        let tp = matrix.counts[i][i];
        trace += tp;
        let row_sum = matrix.support(i);
        let col_sum: u64 = (0..k).map(|r| matrix.counts[r][i]).sum();
        let fp = col_sum - tp;
        let fn_ = row_sum - tp;
        let degenerate = tp + fp == 0 || tp + fn_ == 0;
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            class: matrix.classes[i],
            precision,
            recall,
            f1,
            support: row_sum,
            degenerate,
        });
    }

    let kf = k as f64;
    let totalf = total as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / kf;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / totalf
    };
    Ok(ClassReport {
        accuracy: trace as f64 / totalf,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        weighted_precision: weighted(|m| m.precision),
        weighted_recall: weighted(|m| m.recall),
        weighted_f1: weighted(|m| m.f1),
        per_class,
        total,
    })
}

const NAME_WIDTH: usize = 12;

fn clip_name(name: &str) -> String {
    if name.chars().count() > NAME_WIDTH {
        let mut s: String = name.chars().take(NAME_WIDTH - 1).collect();
        s.push('~');
        s
    } else {
        name.to_string()
    }
}

/// Renders the fixed-width per-class table with a weighted totals row.
///
/// Rates print with two decimals; the column order is
/// precision / recall / f1-score / support. Names longer than the name
/// column are clipped with a trailing `~`.
pub fn render_report(report: &ClassReport, class_names: &[&str]) -> Result<String, MetricsError> {
    if class_names.len() != report.per_class.len() {
        return Err(MetricsError::NameCountMismatch {
            expected: report.per_class.len(),
            got: class_names.len(),
        });
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<NAME_WIDTH$}{:>10}{:>8}{:>10}{:>9}",
        "", "precision", "recall", "f1-score", "support"
    );
    let _ = writeln!(out);
    for (metrics, name) in report.per_class.iter().zip(class_names) {
        let _ = writeln!(
            out,
            "{:<NAME_WIDTH$}{:>10.2}{:>8.2}{:>10.2}{:>9}",
            clip_name(name),
            metrics.precision,
            metrics.recall,
            metrics.f1,
            metrics.support
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<NAME_WIDTH$}{:>10.2}{:>8.2}{:>10.2}{:>9}",
        "total",
        report.weighted_precision,
        report.weighted_recall,
        report.weighted_f1,
        report.total
    );
    Ok(out)
}

/// Renders the machine-readable `key=value` form.
///
/// Keys: `accuracy`, `<name>.precision` / `.recall` / `.f1` / `.support` per
/// class, and `macro_` / `weighted_` aggregate rates. Rates carry six
/// decimals.
pub fn report_kv(report: &ClassReport, class_names: &[&str]) -> Result<String, MetricsError> {
    if class_names.len() != report.per_class.len() {
        return Err(MetricsError::NameCountMismatch {
            expected: report.per_class.len(),
            got: class_names.len(),
        });
    }
    let mut out = String::new();
    let _ = writeln!(out, "accuracy={:.6}", report.accuracy);
    for (metrics, name) in report.per_class.iter().zip(class_names) {
        let _ = writeln!(out, "{name}.precision={:.6}", metrics.precision);
        let _ = writeln!(out, "{name}.recall={:.6}", metrics.recall);
        let _ = writeln!(out, "{name}.f1={:.6}", metrics.f1);
        let _ = writeln!(out, "{name}.support={}", metrics.support);
    }
    let _ = writeln!(out, "macro_precision={:.6}", report.macro_precision);
    let _ = writeln!(out, "macro_recall={:.6}", report.macro_recall);
    let _ = writeln!(out, "macro_f1={:.6}", report.macro_f1);
    let _ = writeln!(out, "weighted_precision={:.6}", report.weighted_precision);
    let _ = writeln!(out, "weighted_recall={:.6}", report.weighted_recall);
    let _ = writeln!(out, "weighted_f1={:.6}", report.weighted_f1);
    Ok(out)
}
