//! Base-performance metrics table.

use crate::analysis::{balanced_accuracy, f1, ConfusionCounts};
use crate::corpus::{Language, Split};
use crate::features::FeatureGroup;

use super::ReportError;

/// One evaluated (model, split) cell.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub group: FeatureGroup,
    pub language: Language,
    pub split: Split,
    pub counts: ConfusionCounts,
}

/// The table in both machine and human form.
#[derive(Debug, Clone)]
pub struct MetricsTable {
    pub csv: String,
    pub text: String,
}

/// Rounds a fraction to a whole percentage, half up.
pub fn percent(fraction: f64) -> u32 {
    (fraction * 100.0 + 0.5).floor() as u32
}

/// Builds the metrics table: one row per (group, language, split) with the
/// split's RI prevalence and rounded F1 / balanced accuracy percentages.
pub fn emit_metrics_table(rows: &[MetricsRow]) -> Result<MetricsTable, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::NothingToRender("no metrics rows".to_string()));
    }
    let mut csv =
        String::from("group,language,split,ri_prevalence_pct,f1_pct,balanced_accuracy_pct\n");
    let mut text = format!(
        "{:<12} {:<10} {:<6} {:>10} {:>5} {:>5}\n",
        "group", "language", "split", "prevalence", "F1", "Acc."
    );
    for row in rows {
        let f1_pct = percent(f1(&row.counts)?);
        let acc_pct = percent(balanced_accuracy(&row.counts)?);
        let prevalence = percent(row.counts.positive_prevalence());
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.group, row.language, row.split, prevalence, f1_pct, acc_pct
        ));
        text.push_str(&format!(
            "{:<12} {:<10} {:<6} {:>10} {:>5} {:>5}\n",
            row.group.to_string(),
            row.language.to_string(),
            row.split.to_string(),
            format!("{prevalence}% RI"),
            f1_pct,
            acc_pct
        ));
    }
    Ok(MetricsTable { csv, text })
}
