//! Five-number summaries for box plots.

use super::AnalysisError;

/// Distribution summary: quartiles, 1.5*IQR whiskers, outliers and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest value inside the lower fence.
    pub whisker_low: f64,
    /// Largest value inside the upper fence.
    pub whisker_high: f64,
    /// Values outside `[q1 - 1.5*IQR, q3 + 1.5*IQR]`, in ascending order.
    pub outliers: Vec<f64>,
    pub mean: f64,
}

/// Quantile by linear interpolation of order statistics (the inclusive
/// method: rank `(n-1)*p` into the sorted values).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = (n - 1) as f64 * p;
    let lower = rank.floor() as usize;
    let fraction = rank - lower as f64;
    if fraction == 0.0 || lower + 1 >= n {
        sorted[lower]
    } else {
        sorted[lower] + fraction * (sorted[lower + 1] - sorted[lower])
    }
}

/// Summarizes a non-empty list of finite values.
pub fn box_stats(values: &[f64]) -> Result<BoxStats, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyValues);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteValue(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lower_fence = q1 - 1.5 * iqr;
    let upper_fence = q3 + 1.5 * iqr;

    let outliers: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v < lower_fence || *v > upper_fence)
        .collect();
    let inside: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v >= lower_fence && *v <= upper_fence)
        .collect();
    // [q1, q3] always lies inside the fences, so `inside` is never empty.
    let whisker_low = inside[0];
    let whisker_high = inside[inside.len() - 1];
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;

    Ok(BoxStats {
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
        mean,
    })
}
