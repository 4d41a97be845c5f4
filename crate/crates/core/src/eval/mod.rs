//! Classifier scoring: confusion matrix, class-wise rates, ROC curves.
//!
//! Rates are kept as fractions in `[0, 1]`; [`percent`] renders them for
//! reports. A rate whose defining denominator is empty is `None` rather than
//! zero or `NaN`, so reports can print it as undefined instead of smuggling
//! in a made-up number.


use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beats::AamiClass;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Empty(String),
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("ROC needs at least one positive and one negative label")]
    OneClassOnly,
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
}

/// Counts of truth against prediction over the three classes,
/// `counts[truth][predicted]` in class-index order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix3 {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix3 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, truth: AamiClass, predicted: AamiClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn count(&self, truth: AamiClass, predicted: AamiClass) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix3) {
        for t in 0..3 {
            for p in 0..3 {
                self.counts[t][p] += other.counts[t][p];
            }
        }
    }
}

impl fmt::Display for ConfusionMatrix3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>12} {:>8} {:>8} {:>8}", "truth\\pred", "N", "S", "V")?;
        for class in AamiClass::ALL {
            let row = self.counts[class.index()];
            writeln!(
                f,
                "{:>12} {:>8} {:>8} {:>8}",
                class.letter(),
                row[0],
                row[1],
                row[2]
            )?;
        }
        Ok(())
    }
}

/// One-versus-rest tallies and rates for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub true_positives: u64,
    pub false_negatives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    /// Recall of the class, `TP / (TP + FN)`.
    pub sensitivity: Option<f64>,
    /// Rejection of the rest, `TN / (TN + FP)`.
    pub specificity: Option<f64>,
    /// Positive predictivity, `TP / (TP + FP)`.
    pub precision: Option<f64>,
    /// Harmonic mean of precision and sensitivity; zero when both are
    /// defined but zero.
    pub f1: Option<f64>,
}

/// Everything a run reports: the matrix, per-class rates, and accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub matrix: ConfusionMatrix3,
    pub per_class: [ClassMetrics; 3],
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_matrix(matrix: &ConfusionMatrix3) -> Result<Self, EvalError> {
        let total = matrix.total();
        if total == 0 {
            return Err(EvalError::Empty("empty confusion matrix".into()));
        }
        let per_class = AamiClass::ALL.map(|class| {
            let c = class.index();
            let tp = matrix.counts[c][c];
            let fn_ = matrix.counts[c].iter().sum::<u64>() - tp;
            let fp = (0..3).map(|t| matrix.counts[t][c]).sum::<u64>() - tp;
            let tn = total - tp - fn_ - fp;
            let sensitivity = ratio(tp, tp + fn_);
            let precision = ratio(tp, tp + fp);
            let f1 = match (sensitivity, precision) {
                (Some(s), Some(p)) if s + p > 0.0 => Some(2.0 * s * p / (s + p)),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            };
            ClassMetrics {
                true_positives: tp,
                false_negatives: fn_,
                false_positives: fp,
                true_negatives: tn,
                sensitivity,
                specificity: ratio(tn, tn + fp),
                precision,
                f1,
            }
        });
        let trace = (0..3).map(|c| matrix.counts[c][c]).sum::<u64>();
        Ok(Self {
            matrix: *matrix,
            per_class,
            accuracy: trace as f64 / total as f64,
        })
    }

    pub fn class(&self, class: AamiClass) -> &ClassMetrics {
        &self.per_class[class.index()]
    }

    /// Mean of the three per-class F1 scores; `None` if any is undefined.
    pub fn macro_f1(&self) -> Option<f64> {
        let mut acc = 0.0;
        for m in &self.per_class {
            acc += m.f1?;
        }
        Some(acc / 3.0)
    }
}

/// A fraction as a percentage with two decimals, or a dash when undefined.
pub fn percent(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.2}", 100.0 * r),
        None => "-".to_string(),
    }
}

/// A receiver operating characteristic built by sweeping a threshold from
/// above the highest score downward. Tied scores move together, so the curve
/// is the same no matter how ties are ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Score threshold that produced each point; infinity for the origin.
    pub thresholds: Vec<f64>,
    /// Area under the curve by the trapezoid rule.
    pub auc: f64,
}

/// Score-ordered sweep over one-versus-rest labels. Needs both a positive
/// and a negative example; a constant score yields the chance diagonal.
pub fn roc_curve(scores: &[f64], positives: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != positives.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: positives.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let pos_total = positives.iter().filter(|&&p| p).count() as f64;
    let neg_total = positives.len() as f64 - pos_total;
    if pos_total == 0.0 || neg_total == 0.0 {
        return Err(EvalError::OneClassOnly);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let mut auc = 0.0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // everything tied at this score flips in one step
        while i < order.len() && scores[order[i]] == threshold {
            if positives[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let point = (fp as f64 / neg_total, tp as f64 / pos_total);
        let prev = *points.last().unwrap();
        auc += (point.0 - prev.0) * (point.1 + prev.1) / 2.0;
        points.push(point);
        thresholds.push(threshold);
    }
    Ok(RocCurve {
        points,
        thresholds,
        auc,
    })
}

/// One-versus-rest ROC for one class from per-beat probability rows.
pub fn class_roc(
    probabilities: &[Vec<f64>],
    truths: &[AamiClass],
    class: AamiClass,
) -> Result<RocCurve, EvalError> {
    if probabilities.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            scores: probabilities.len(),
            labels: truths.len(),
        });
    }
    let scores: Vec<f64> = probabilities.iter().map(|p| p[class.index()]).collect();
    let positives: Vec<bool> = truths.iter().map(|&t| t == class).collect();
    roc_curve(&scores, &positives)
}
