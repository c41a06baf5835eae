use serde::{Deserialize, Serialize};

use super::EvaluationError;

/// Binary confusion counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Sensitivity, `tp / (tp + fn)`.
    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Specificity, `tn / (tn + fp)`.
    pub fn tnr(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.tn + self.fp)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Tallies predictions against truth.
pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionMatrix, EvaluationError> {
    if pred.len() != truth.len() {
        return Err(EvaluationError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => cm.tp += 1,
            (1, _) => cm.fp += 1,
            (_, 1) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Classification metrics. `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub balanced_accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
}

impl MetricSet {
    pub const NAMES: [&'static str; 5] = ["balanced_accuracy", "recall", "precision", "f1", "accuracy"];

    pub fn values(&self) -> [Option<f64>; 5] {
        [self.balanced_accuracy, self.recall, self.precision, self.f1, self.accuracy]
    }
}

/// Closed-form metrics of a confusion matrix.
///
/// F1 is the harmonic mean of precision and recall and is undefined when
/// either is undefined or both are zero.
pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let recall = cm.tpr();
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let balanced_accuracy = match (cm.tpr(), cm.tnr()) {
        (Some(tpr), Some(tnr)) => Some((tpr + tnr) / 2.0),
        _ => None,
    };
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    MetricSet {
        balanced_accuracy,
        recall,
        precision,
        f1,
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
    }
}
