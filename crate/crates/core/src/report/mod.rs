//! Plot and table rendering.
//!
//! Every figure gets a CSV twin carrying the numbers behind it: figures are
//! for people, CSVs are for scripts and tests.

mod svg;
mod table;

pub use svg::{
    box_groups_csv, render_box_plot, render_pfi_plot, BoxGroups, PlotDocument, COLOR_NEGATIVE,
    COLOR_POSITIVE, COLOR_ZERO,
};
pub use table::{emit_metrics_table, percent, MetricsRow, MetricsTable};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("nothing to render: {0}")]
    NothingToRender(String),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
}
