//! Evaluation metrics, permutation feature importance and distribution
//! summaries.
//!
//! Children who require intervention carry the positive label (RI = 1), so
//! a true positive is a correctly flagged child. Balanced accuracy — the
//! mean of the two per-class recalls — is the primary score because the
//! class mix is uneven; F1 is reported alongside it.

mod pfi;
mod stats;

pub use pfi::{
    permutation_importance, pfi_to_csv, CoefficientSign, PfiOptions, PfiResult,
    EXHAUSTIVE_PERMUTATION_LIMIT,
};
pub use stats::{box_stats, BoxStats};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("predictions and labels have different lengths ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("value {value} at position {index} is not a binary label")]
    NonBinary { index: usize, value: u8 },
    #[error("balanced accuracy needs both classes among the labels (missing class {missing})")]
    MissingClass { missing: u8 },
    #[error("F1 is undefined without positive labels or positive predictions")]
    F1Undefined,
    #[error("cannot summarize an empty value list")]
    EmptyValues,
    #[error("value {0} is not finite")]
    NonFiniteValue(f64),
    #[error("matrix needs at least 2 rows for permutation importance, got {0}")]
    TooFewRows(usize),
    #[error("record {child_id} has no RI label")]
    Unlabeled { child_id: String },
    #[error(transparent)]
    Glm(#[from] crate::glm::GlmError),
}

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    /// Fraction of evaluated records with a positive (RI = 1) label.
    pub fn positive_prevalence(&self) -> f64 {
        let positives = self.true_positives + self.false_negatives;
        positives as f64 / self.total() as f64
    }
}

/// Tallies predictions against labels. Both sides must be 0/1 and equally
/// long.
pub fn confusion(predictions: &[u8], labels: &[u8]) -> Result<ConfusionCounts, AnalysisError> {
    if predictions.len() != labels.len() {
        return Err(AnalysisError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    for (index, &value) in predictions.iter().chain(labels).enumerate() {
        if value > 1 {
            return Err(AnalysisError::NonBinary {
                index: index % predictions.len(),
                value,
            });
        }
    }
    let mut counts = ConfusionCounts::default();
    for (&prediction, &label) in predictions.iter().zip(labels) {
        match (prediction, label) {
            (1, 1) => counts.true_positives += 1,
            (1, 0) => counts.false_positives += 1,
            (0, 0) => counts.true_negatives += 1,
            (0, 1) => counts.false_negatives += 1,
            _ => unreachable!("values validated above"),
        }
    }
    Ok(counts)
}

/// Mean of the two per-class recalls:
/// `0.5 * (tp/(tp+fn) + tn/(tn+fp))`. Undefined when a class is absent.
pub fn balanced_accuracy(counts: &ConfusionCounts) -> Result<f64, AnalysisError> {
    let positives = counts.true_positives + counts.false_negatives;
    let negatives = counts.true_negatives + counts.false_positives;
    if positives == 0 {
        return Err(AnalysisError::MissingClass { missing: 1 });
    }
    if negatives == 0 {
        return Err(AnalysisError::MissingClass { missing: 0 });
    }
    let sensitivity = counts.true_positives as f64 / positives as f64;
    let specificity = counts.true_negatives as f64 / negatives as f64;
    Ok(0.5 * (sensitivity + specificity))
}

/// `2*tp / (2*tp + fp + fn)`, with the zero-tp convention: 0 when there are
/// no true positives but some positive labels or predictions exist.
pub fn f1(counts: &ConfusionCounts) -> Result<f64, AnalysisError> {
    let denominator = 2 * counts.true_positives + counts.false_positives + counts.false_negatives;
    if denominator == 0 {
        return Err(AnalysisError::F1Undefined);
    }
    Ok(2.0 * counts.true_positives as f64 / denominator as f64)
}

/// Evaluation metric selector for scoring and permutation importance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    BalancedAccuracy,
    F1,
}

impl Metric {
    pub fn score(self, counts: &ConfusionCounts) -> Result<f64, AnalysisError> {
        match self {
            Metric::BalancedAccuracy => balanced_accuracy(counts),
            Metric::F1 => f1(counts),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::BalancedAccuracy => "balanced_accuracy",
            Metric::F1 => "f1",
        }
    }
}
