//! Permutation feature importance.
//!
//! The importance of feature `j` is the average drop in score when column
//! `j` is shuffled: baseline `s` minus the mean of `R` rescored shuffles.
//! Every (feature, repetition) pair derives its own generator from the
//! master seed in counter mode, so results are bit-identical regardless of
//! evaluation order (and therefore of `jobs`).
//!
//! For matrices with at most 7 rows an exhaustive mode replaces sampling by
//! iterating all `n!` permutations, which is the exact value the sampled
//! estimate converges to.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;
use crate::glm::{sigmoid, TrainedModel};

use super::{confusion, AnalysisError, Metric};

/// Largest `n!` the exhaustive mode will enumerate (7! = 5040).
pub const EXHAUSTIVE_PERMUTATION_LIMIT: usize = 5040;

/// Sign of the model coefficient behind a feature, used to color plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientSign {
    Positive,
    Negative,
    Zero,
}

impl CoefficientSign {
    pub fn of(weight: f64) -> Self {
        if weight.abs() < 1e-12 {
            CoefficientSign::Zero
        } else if weight > 0.0 {
            CoefficientSign::Positive
        } else {
            CoefficientSign::Negative
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoefficientSign::Positive => "positive",
            CoefficientSign::Negative => "negative",
            CoefficientSign::Zero => "zero",
        }
    }
}

/// Importance of one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct PfiResult {
    pub feature_name: String,
    /// Score of the untouched matrix.
    pub baseline_score: f64,
    /// Per-repetition drops `s - s_{r,j}` (length `R`, or `n!` in
    /// exhaustive mode).
    pub drops: Vec<f64>,
    /// Arithmetic mean of `drops`.
    pub mean_drop: f64,
    pub coefficient_sign: CoefficientSign,
}

impl PfiResult {
    /// Population standard deviation of the drops.
    pub fn std_drop(&self) -> f64 {
        let n = self.drops.len() as f64;
        let variance = self
            .drops
            .iter()
            .map(|d| (d - self.mean_drop).powi(2))
            .sum::<f64>()
            / n;
        variance.sqrt()
    }
}

/// Knobs for [`permutation_importance`].
#[derive(Debug, Clone, Copy)]
pub struct PfiOptions {
    /// Shuffles per feature in sampled mode.
    pub repetitions: usize,
    pub master_seed: u64,
    /// Enumerate all permutations instead of sampling when the row count
    /// allows it (n! <= [`EXHAUSTIVE_PERMUTATION_LIMIT`]).
    pub exhaustive: bool,
    /// Worker threads across features; any value gives identical output.
    pub jobs: usize,
}

impl Default for PfiOptions {
    fn default() -> Self {
        Self {
            repetitions: 100,
            master_seed: 0,
            exhaustive: false,
            jobs: 1,
        }
    }
}

fn labels_of(matrix: &FeatureMatrix) -> Result<Vec<u8>, AnalysisError> {
    matrix
        .labels()
        .iter()
        .enumerate()
        .map(|(i, label)| {
            label.ok_or_else(|| AnalysisError::Unlabeled {
                child_id: matrix.record_ids()[i].clone(),
            })
        })
        .collect()
}

fn score_with_column(
    model: &TrainedModel,
    matrix: &FeatureMatrix,
    labels: &[u8],
    metric: Metric,
    column: usize,
    values: &[f64],
) -> Result<f64, AnalysisError> {
    let predictions: Vec<u8> = matrix
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut z = 0.0;
            for (j, (w, x)) in model.weights.iter().zip(row).enumerate() {
                let x = if j == column { values[i] } else { *x };
                z += w * x;
            }
            u8::from(sigmoid(z + model.intercept) >= 0.5)
        })
        .collect();
    metric.score(&confusion(&predictions, labels)?)
}

/// Derives the generator for one (feature, repetition) cell. ChaCha streams
/// act as the counter: master seed keys the cipher, the cell picks the
/// stream.
fn cell_rng(master_seed: u64, feature: usize, repetition: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((feature as u64) << 32) | repetition as u64);
    rng
}

/// Lexicographic next-permutation; returns false once the sequence is the
/// last (descending) one.
fn next_permutation(indices: &mut [usize]) -> bool {
    if indices.len() < 2 {
        return false;
    }
    let mut i = indices.len() - 1;
    while i > 0 && indices[i - 1] >= indices[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = indices.len() - 1;
    while indices[j] <= indices[i - 1] {
        j -= 1;
    }
    indices.swap(i - 1, j);
    indices[i..].reverse();
    true
}

fn factorial(n: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

/// Computes permutation importance for every feature of the matrix.
///
/// The matrix must be fully labeled and carry at least two rows; the metric
/// must be defined on it (balanced accuracy needs both classes present).
pub fn permutation_importance(
    model: &TrainedModel,
    matrix: &FeatureMatrix,
    metric: Metric,
    options: &PfiOptions,
) -> Result<Vec<PfiResult>, AnalysisError> {
    if matrix.n_rows() < 2 {
        return Err(AnalysisError::TooFewRows(matrix.n_rows()));
    }
    if model.feature_names != matrix.feature_names() {
        return Err(AnalysisError::Glm(crate::glm::GlmError::NameMismatch {
            expected: model.feature_names.join(", "),
            got: matrix.feature_names().join(", "),
        }));
    }
    let labels = labels_of(matrix)?;
    let baseline_predictions = crate::glm::predict_matrix(model, matrix)?;
    let baseline_score = metric.score(&confusion(&baseline_predictions, &labels)?)?;

    let n_features = matrix.n_features();
    let use_exhaustive = options.exhaustive
        && factorial(matrix.n_rows()).is_some_and(|f| f <= EXHAUSTIVE_PERMUTATION_LIMIT);

    let one_feature = |feature: usize| -> Result<PfiResult, AnalysisError> {
        let original = matrix.column(feature);
        let n = original.len();
        let mut drops = Vec::new();
        if use_exhaustive {
            let mut indices: Vec<usize> = (0..n).collect();
            loop {
                let values: Vec<f64> = indices.iter().map(|&i| original[i]).collect();
                let score = score_with_column(model, matrix, &labels, metric, feature, &values)?;
                drops.push(baseline_score - score);
                if !next_permutation(&mut indices) {
                    break;
                }
            }
        } else {
            for repetition in 0..options.repetitions {
                let mut values = original.clone();
                let mut rng = cell_rng(options.master_seed, feature, repetition);
                values.shuffle(&mut rng);
                let score = score_with_column(model, matrix, &labels, metric, feature, &values)?;
                drops.push(baseline_score - score);
            }
        }
        let mean_drop = drops.iter().sum::<f64>() / drops.len() as f64;
        Ok(PfiResult {
            feature_name: matrix.feature_names()[feature].clone(),
            baseline_score,
            drops,
            mean_drop,
            coefficient_sign: CoefficientSign::of(model.weights[feature]),
        })
    };

    if options.jobs <= 1 || n_features <= 1 {
        (0..n_features).map(one_feature).collect()
    } else {
        let workers = options.jobs.min(n_features);
        let chunk = n_features.div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|worker| {
                    let start = worker * chunk;
                    let end = (start + chunk).min(n_features);
                    let one_feature = &one_feature;
                    scope.spawn(move || (start..end).map(one_feature).collect::<Vec<_>>())
                })
                .collect();
            let mut results = Vec::with_capacity(n_features);
            for handle in handles {
                for result in handle.join().expect("worker does not panic") {
                    results.push(result?);
                }
            }
            Ok(results)
        })
    }
}

/// CSV export with one row per feature.
pub fn pfi_to_csv(results: &[PfiResult]) -> String {
    let mut out = String::from("feature,mean_drop,std_drop,coefficient_sign,baseline_score,R\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.feature_name,
            r.mean_drop,
            r.std_drop(),
            r.coefficient_sign.as_str(),
            r.baseline_score,
            r.drops.len()
        ));
    }
    out
}
