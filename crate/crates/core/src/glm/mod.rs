//! Regularized binary logistic regression.
//!
//! Group models are trained with an L2 penalty (Newton solver); keyword
//! selection uses an L1 penalty (coordinate descent) over a fixed schedule
//! of penalty strengths. The objective is the solver-library convention
//!
//! ```text
//! C * sum_i log(1 + exp(-y_i (w.x_i + b))) + penalty(w)
//! ```
//!
//! with `y_i` in {-1, +1}, `penalty = 0.5 ||w||^2` for L2 or `||w||_1` for
//! L1, and an unpenalized intercept `b`. Both solvers are deterministic.

mod coordinate;
mod model_file;
mod newton;

use std::fmt;

use crate::corpus::Language;
use crate::features::{
    FeatureGroup, FeatureMatrix, FeatureVector, KeywordProvenance, KeywordSpec,
    STORY_CONTROL_FEATURE,
};

pub use model_file::{
    from_string as model_from_string, load as load_model, save as save_model,
    to_string as model_to_string,
};

/// Penalty strengths tried, weakest penalty last, when selecting keywords.
pub const KEYWORD_C_SCHEDULE: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, thiserror::Error)]
pub enum GlmError {
    #[error("training data contains a single class (all labels are {label})")]
    SingleClass { label: u8 },
    #[error("training matrix is empty")]
    EmptyMatrix,
    #[error("record {child_id} has no RI label; drop unlabeled rows before training")]
    Unlabeled { child_id: String },
    #[error("feature value at row {row}, column {column} is not finite")]
    NonFiniteFeature { row: usize, column: usize },
    #[error("invalid penalty configuration: {0}")]
    InvalidPenalty(String),
    #[error("solver did not converge in {iterations} iterations (optimality {optimality:.3e})")]
    NonConvergence { optimality: f64, iterations: usize },
    #[error("feature names do not match the model (expected [{expected}], got [{got}])")]
    NameMismatch { expected: String, got: String },
    #[error("classification threshold {0} must lie strictly between 0 and 1")]
    BadThreshold(f64),
    #[error("keyword selection found no penalty with at least {needed} nonzero weights (best was {best}); try a larger C")]
    SelectionFailed { needed: usize, best: usize },
    #[error("model file error: {0}")]
    ModelFile(String),
}

/// Which regularizer the objective carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    L2,
    L1,
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyKind::L2 => f.write_str("l2"),
            PenaltyKind::L1 => f.write_str("l1"),
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l2" => Ok(PenaltyKind::L2),
            "l1" => Ok(PenaltyKind::L1),
            other => Err(format!("unknown penalty \"{other}\" (expected l1 or l2)")),
        }
    }
}

/// Penalty kind plus solver knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    /// Inverse penalty strength; larger C penalizes less.
    pub c: f64,
    /// Optimality tolerance: gradient norm (L2) or minimal-norm
    /// subgradient (L1).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            kind: PenaltyKind::L2,
            c: 1.0,
            tolerance: 1e-8,
            max_iterations: 1000,
        }
    }
}

impl PenaltyConfig {
    fn validate(&self) -> Result<(), GlmError> {
        if self.c.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !self.c.is_finite() {
            return Err(GlmError::InvalidPenalty(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if self.tolerance.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || !self.tolerance.is_finite()
        {
            return Err(GlmError::InvalidPenalty(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(GlmError::InvalidPenalty(
                "max_iterations must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Provenance recorded with a trained model.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelMeta {
    pub group: Option<FeatureGroup>,
    pub language: Option<Language>,
    pub seed: Option<u64>,
}

/// A fitted logistic model for one feature group.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub penalty: PenaltyConfig,
    pub meta: ModelMeta,
}

impl TrainedModel {
    pub fn new(
        feature_names: Vec<String>,
        weights: Vec<f64>,
        intercept: f64,
        penalty: PenaltyConfig,
        meta: ModelMeta,
    ) -> Result<Self, GlmError> {
        if weights.len() != feature_names.len() {
            return Err(GlmError::ModelFile(format!(
                "{} weights for {} names",
                weights.len(),
                feature_names.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) || !intercept.is_finite() {
            return Err(GlmError::ModelFile("non-finite parameter".to_string()));
        }
        Ok(Self {
            feature_names,
            weights,
            intercept,
            penalty,
            meta,
        })
    }

    /// Linear decision value `w.x + b` for a raw row in model column order.
    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut z = 0.0;
        for (w, x) in self.weights.iter().zip(row) {
            z += w * x;
        }
        z + self.intercept
    }
}

/// Convergence details from a fit.
#[derive(Debug, Clone)]
pub struct TrainDiagnostics {
    /// Full solver iterations (Newton steps or coordinate passes) taken
    /// before the optimality check passed.
    pub iterations: usize,
    pub final_optimality: f64,
    /// Objective value at the start of each iteration; non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Borrowed view of a labeled design matrix.
pub(crate) struct Problem<'a> {
    rows: &'a [Vec<f64>],
    labels: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn n_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn value(&self, row: usize, column: usize) -> f64 {
        self.rows[row][column]
    }

    /// Label in {0, 1}.
    fn label(&self, row: usize) -> f64 {
        self.labels[row]
    }

    /// Label mapped to {-1, +1}.
    fn signed_label(&self, row: usize) -> f64 {
        2.0 * self.labels[row] - 1.0
    }

    fn decision(&self, params: &[f64], row: usize) -> f64 {
        let d = self.n_features();
        let mut z = 0.0;
        for (w, x) in params[..d].iter().zip(&self.rows[row]) {
            z += w * x;
        }
        z + params[d]
    }
}

fn problem_from(matrix: &FeatureMatrix) -> Result<Problem<'_>, GlmError> {
    if matrix.n_rows() == 0 {
        return Err(GlmError::EmptyMatrix);
    }
    let mut labels = Vec::with_capacity(matrix.n_rows());
    for (i, label) in matrix.labels().iter().enumerate() {
        match label {
            Some(l) => labels.push(f64::from(*l)),
            None => {
                return Err(GlmError::Unlabeled {
                    child_id: matrix.record_ids()[i].clone(),
                })
            }
        }
    }
    for (i, row) in matrix.rows().iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(GlmError::NonFiniteFeature { row: i, column: j });
        }
    }
    let positives = labels.iter().filter(|&&l| l == 1.0).count();
    if positives == 0 {
        return Err(GlmError::SingleClass { label: 0 });
    }
    if positives == labels.len() {
        return Err(GlmError::SingleClass { label: 1 });
    }
    Ok(Problem {
        rows: matrix.rows(),
        labels,
    })
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains a model on a fully labeled matrix.
pub fn train(matrix: &FeatureMatrix, penalty: &PenaltyConfig) -> Result<TrainedModel, GlmError> {
    train_detailed(matrix, penalty, ModelMeta::default(), None).map(|(model, _)| model)
}

/// [`train`] with metadata, an optional warm start (`d` weights followed by
/// the intercept) and convergence diagnostics.
pub fn train_detailed(
    matrix: &FeatureMatrix,
    penalty: &PenaltyConfig,
    meta: ModelMeta,
    init: Option<&[f64]>,
) -> Result<(TrainedModel, TrainDiagnostics), GlmError> {
    penalty.validate()?;
    let problem = problem_from(matrix)?;
    let d = problem.n_features();
    let zeros = vec![0.0; d + 1];
    let start = match init {
        Some(given) => {
            if given.len() != d + 1 {
                return Err(GlmError::InvalidPenalty(format!(
                    "warm start has {} parameters, expected {}",
                    given.len(),
                    d + 1
                )));
            }
            given.to_vec()
        }
        None => zeros,
    };
    let (params, diagnostics) = match penalty.kind {
        PenaltyKind::L2 => newton::fit_l2(
            &problem,
            penalty.c,
            penalty.tolerance,
            penalty.max_iterations,
            &start,
        )?,
        PenaltyKind::L1 => coordinate::fit_l1(
            &problem,
            penalty.c,
            penalty.tolerance,
            penalty.max_iterations,
            &start,
        )?,
    };
    let model = TrainedModel::new(
        matrix.feature_names().to_vec(),
        params[..d].to_vec(),
        params[d],
        *penalty,
        meta,
    )?;
    Ok((model, diagnostics))
}

fn check_names(model: &TrainedModel, names: &[String]) -> Result<(), GlmError> {
    if model.feature_names != names {
        return Err(GlmError::NameMismatch {
            expected: model.feature_names.join(", "),
            got: names.join(", "),
        });
    }
    Ok(())
}

/// Probability of the positive class (`RI = 1`) for one feature vector.
pub fn predict_proba(model: &TrainedModel, x: &FeatureVector) -> Result<f64, GlmError> {
    check_names(model, x.names())?;
    Ok(sigmoid(model.decision(x.values())))
}

/// Hard label at the given threshold: 1 iff the probability is >= it.
pub fn predict(model: &TrainedModel, x: &FeatureVector, threshold: f64) -> Result<u8, GlmError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(GlmError::BadThreshold(threshold));
    }
    Ok(u8::from(predict_proba(model, x)? >= threshold))
}

/// Hard labels for every row of a matrix at threshold 0.5.
pub fn predict_matrix(model: &TrainedModel, matrix: &FeatureMatrix) -> Result<Vec<u8>, GlmError> {
    check_names(model, matrix.feature_names())?;
    Ok(matrix
        .rows()
        .iter()
        .map(|row| u8::from(sigmoid(model.decision(row)) >= 0.5))
        .collect())
}

/// Analytic gradient of the model's training objective at its parameters,
/// one entry per weight followed by the intercept. For L1 models the
/// penalty contributes `sign(w)` (0 at exactly zero weights).
pub fn loss_gradient(model: &TrainedModel, matrix: &FeatureMatrix) -> Result<Vec<f64>, GlmError> {
    check_names(model, matrix.feature_names())?;
    let problem = problem_from(matrix)?;
    let d = problem.n_features();
    let mut params = model.weights.clone();
    params.push(model.intercept);
    let mut gradient = vec![0.0; d + 1];
    for i in 0..problem.n_rows() {
        let residual = sigmoid(problem.decision(&params, i)) - problem.label(i);
        for (j, g) in gradient.iter_mut().take(d).enumerate() {
            *g += model.penalty.c * residual * problem.value(i, j);
        }
        gradient[d] += model.penalty.c * residual;
    }
    for j in 0..d {
        gradient[j] += match model.penalty.kind {
            PenaltyKind::L2 => params[j],
            PenaltyKind::L1 => {
                if params[j] > 0.0 {
                    1.0
                } else if params[j] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        };
    }
    Ok(gradient)
}

/// The outcome of L1 keyword selection, including what the selector saw.
#[derive(Debug, Clone)]
pub struct KeywordSelection {
    pub spec: KeywordSpec,
    pub chosen_c: f64,
    pub candidates: Vec<String>,
    /// L1 weights aligned with `candidates` (the story-control weight, when
    /// present, is not included here).
    pub candidate_weights: Vec<f64>,
}

impl KeywordSelection {
    pub fn provenance(&self) -> KeywordProvenance {
        KeywordProvenance {
            candidates: self.candidates.clone(),
            chosen_c: self.chosen_c,
            candidate_weights: self.candidate_weights.clone(),
        }
    }
}

/// Selects `k` keywords from candidate count columns via L1 fits over
/// [`KEYWORD_C_SCHEDULE`], taking the first penalty strength that leaves at
/// least `k` candidates with nonzero weight and then the `k` largest by
/// absolute weight (ties broken lexicographically). A story-control column,
/// when present, is always kept out of the count and out of the selection.
pub fn select_keywords(
    language: Language,
    candidates: &[String],
    matrix: &FeatureMatrix,
    k: usize,
) -> Result<KeywordSpec, GlmError> {
    select_keywords_detailed(language, candidates, matrix, k).map(|selection| selection.spec)
}

pub fn select_keywords_detailed(
    language: Language,
    candidates: &[String],
    matrix: &FeatureMatrix,
    k: usize,
) -> Result<KeywordSelection, GlmError> {
    let names = matrix.feature_names();
    let expected_control = names
        .last()
        .map(|n| n == STORY_CONTROL_FEATURE)
        .unwrap_or(false);
    let candidate_count = if expected_control {
        names.len() - 1
    } else {
        names.len()
    };
    if candidates.len() != candidate_count
        || !names[..candidate_count]
            .iter()
            .zip(candidates)
            .all(|(a, b)| a == b)
    {
        return Err(GlmError::NameMismatch {
            expected: candidates.join(", "),
            got: names.join(", "),
        });
    }
    let mut best = 0usize;
    let mut warm_start: Option<Vec<f64>> = None;
    for &c in KEYWORD_C_SCHEDULE.iter() {
        // Correlated count columns make coordinate descent crawl, so the
        // selection fits get a larger pass budget than the default.
        let penalty = PenaltyConfig {
            kind: PenaltyKind::L1,
            c,
            max_iterations: 20_000,
            ..PenaltyConfig::default()
        };
        let (model, _) = train_detailed(
            matrix,
            &penalty,
            ModelMeta::default(),
            warm_start.as_deref(),
        )?;
        let mut params = model.weights.clone();
        params.push(model.intercept);
        warm_start = Some(params);
        let nonzero = model.weights[..candidate_count]
            .iter()
            .filter(|w| **w != 0.0)
            .count();
        best = best.max(nonzero);
        if nonzero >= k {
            let mut ranked: Vec<(String, f64)> = candidates
                .iter()
                .cloned()
                .zip(model.weights[..candidate_count].iter().copied())
                .collect();
            ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
            let keywords: Vec<String> = ranked.iter().take(k).map(|(w, _)| w.clone()).collect();
            let spec = KeywordSpec::new(language, keywords, expected_control)
                .map_err(|e| GlmError::ModelFile(e.to_string()))?;
            return Ok(KeywordSelection {
                spec,
                chosen_c: c,
                candidates: candidates.to_vec(),
                candidate_weights: model.weights[..candidate_count].to_vec(),
            });
        }
    }
    Err(GlmError::SelectionFailed { needed: k, best })
}
