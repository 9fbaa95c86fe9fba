//! Standalone SVG rendering for importance bars and RI box plots.
//!
//! Rendering is a pure function of its inputs: no timestamps, no
//! randomness, fixed float formatting. Identical inputs produce byte
//! identical documents, which the pipeline relies on for reproducibility.

use std::collections::BTreeMap;

use crate::analysis::{box_stats, BoxStats, CoefficientSign, PfiResult};
use crate::corpus::Language;

use super::ReportError;

/// Fill for features whose coefficient predicts intervention.
pub const COLOR_POSITIVE: &str = "#d62728";
/// Fill for features whose coefficient predicts no intervention.
pub const COLOR_NEGATIVE: &str = "#1f77b4";
/// Fill for features with an (effectively) zero coefficient.
pub const COLOR_ZERO: &str = "#7f7f7f";

/// A rendered vector-graphics document.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotDocument {
    pub svg: String,
    pub width: f64,
    pub height: f64,
}

fn color_for(sign: CoefficientSign) -> &'static str {
    match sign {
        CoefficientSign::Positive => COLOR_POSITIVE,
        CoefficientSign::Negative => COLOR_NEGATIVE,
        CoefficientSign::Zero => COLOR_ZERO,
    }
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt(value: f64) -> String {
    format!("{value:.2}")
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(width: f64, height: f64, title: &str, seed: Option<u64>) -> Self {
        let mut body = String::new();
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            w = fmt(width),
            h = fmt(height)
        ));
        body.push_str(&format!("<title>{}</title>\n", escape_xml(title)));
        let seed_part = seed.map(|s| format!(";seed={s}")).unwrap_or_default();
        body.push_str(&format!(
            "<metadata>tool=narrative-screen/{}{}</metadata>\n",
            env!("CARGO_PKG_VERSION"),
            seed_part
        ));
        body.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        Self { body }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        self.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\"{extra}/>\n",
            fmt(x1),
            fmt(y1),
            fmt(x2),
            fmt(y2)
        ));
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        self.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"{extra}/>\n",
            fmt(x),
            fmt(y),
            fmt(w),
            fmt(h)
        ));
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>\n",
            fmt(cx),
            fmt(cy),
            fmt(r)
        ));
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, content: &str) {
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"{size}\">{}</text>\n",
            fmt(x),
            fmt(y),
            escape_xml(content)
        ));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Linear map from a value domain onto pixel coordinates.
struct Scale {
    domain_low: f64,
    domain_span: f64,
    range_low: f64,
    range_span: f64,
}

impl Scale {
    fn new(mut domain_low: f64, mut domain_high: f64, range_low: f64, range_high: f64) -> Self {
        if domain_high - domain_low < 1e-12 {
            domain_low -= 0.5;
            domain_high += 0.5;
        }
        Self {
            domain_low,
            domain_span: domain_high - domain_low,
            range_low,
            range_span: range_high - range_low,
        }
    }

    fn map(&self, value: f64) -> f64 {
        self.range_low + (value - self.domain_low) / self.domain_span * self.range_span
    }
}

/// Renders a horizontal permutation-importance bar chart. Bars are sorted
/// by descending mean drop; colors follow the coefficient sign (red
/// predicts intervention, blue predicts none, gray for zero).
pub fn render_pfi_plot(
    results: &[PfiResult],
    title: &str,
    seed: Option<u64>,
) -> Result<PlotDocument, ReportError> {
    if results.is_empty() {
        return Err(ReportError::NothingToRender(
            "no importance results".to_string(),
        ));
    }
    let mut ordered: Vec<&PfiResult> = results.iter().collect();
    ordered.sort_by(|a, b| {
        b.mean_drop
            .total_cmp(&a.mean_drop)
            .then_with(|| a.feature_name.cmp(&b.feature_name))
    });

    let label_width = 150.0;
    let width = 640.0;
    let row_height = 28.0;
    let top = 46.0;
    let bottom = 50.0;
    let height = top + row_height * ordered.len() as f64 + bottom;
    let plot_right = width - 24.0;
    let axis_y = top + row_height * ordered.len() as f64;

    let min_drop = ordered
        .iter()
        .map(|r| r.mean_drop)
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let max_drop = ordered
        .iter()
        .map(|r| r.mean_drop)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let scale = Scale::new(min_drop, max_drop, label_width, plot_right);

    let mut svg = Svg::new(width, height, title, seed);
    svg.text(width / 2.0, 24.0, "middle", 14, title);

    // Axis ticks.
    for tick in 0..=4 {
        let value = min_drop + (max_drop - min_drop) * tick as f64 / 4.0;
        let x = scale.map(value);
        svg.line(x, top, x, axis_y, "#dddddd", "");
        svg.text(x, axis_y + 16.0, "middle", 10, &format!("{value:.3}"));
    }
    svg.text(
        (label_width + plot_right) / 2.0,
        axis_y + 34.0,
        "middle",
        11,
        "Drop in balanced accuracy",
    );

    let zero_x = scale.map(0.0);
    for (i, result) in ordered.iter().enumerate() {
        let y = top + row_height * i as f64 + 5.0;
        let bar_height = row_height - 10.0;
        let value_x = scale.map(result.mean_drop);
        let (bar_x, bar_width) = if value_x >= zero_x {
            (zero_x, value_x - zero_x)
        } else {
            (value_x, zero_x - value_x)
        };
        svg.rect(
            bar_x,
            y,
            bar_width,
            bar_height,
            color_for(result.coefficient_sign),
            "",
        );
        svg.text(
            label_width - 6.0,
            y + bar_height - 2.0,
            "end",
            11,
            &result.feature_name,
        );
    }
    svg.line(zero_x, top, zero_x, axis_y, "#333333", "");
    svg.line(label_width, axis_y, plot_right, axis_y, "#333333", "");

    Ok(PlotDocument {
        svg: svg.finish(),
        width,
        height,
    })
}

/// One box-plot group: a language crossed with the RI label.
pub type BoxGroups = BTreeMap<(Language, u8), Vec<f64>>;

/// Renders per-group box plots for one feature. RI groups draw red and sit
/// left of their blue non-RI counterparts; the mean is a dotted line and
/// outliers are dots beyond the whiskers.
pub fn render_box_plot(
    groups: &BoxGroups,
    feature_name: &str,
) -> Result<PlotDocument, ReportError> {
    let mut prepared: Vec<((Language, u8), BoxStats)> = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    // Language ascending; within a language RI (red) leads non-RI (blue).
    let mut keys: Vec<&(Language, u8)> = groups.keys().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    for key in keys {
        let values = &groups[key];
        if values.is_empty() {
            continue;
        }
        let stats = box_stats(values)?;
        for v in values {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        prepared.push((*key, stats));
    }
    if prepared.is_empty() {
        return Err(ReportError::NothingToRender(format!(
            "all groups empty for feature {feature_name}"
        )));
    }

    let width = 120.0 * prepared.len() as f64 + 120.0;
    let height = 360.0;
    let top = 48.0;
    let bottom = height - 64.0;
    let scale = Scale::new(lo, hi, bottom, top);

    let mut svg = Svg::new(width, height, feature_name, None);
    svg.text(width / 2.0, 24.0, "middle", 14, feature_name);

    // Value axis ticks on the left.
    for tick in 0..=4 {
        let value = lo + (hi - lo) * tick as f64 / 4.0;
        let y = scale.map(value);
        svg.line(60.0, y, width - 30.0, y, "#eeeeee", "");
        svg.text(54.0, y + 4.0, "end", 10, &format!("{value:.2}"));
    }

    for (i, ((language, ri), stats)) in prepared.iter().enumerate() {
        let center = 120.0 + 120.0 * i as f64;
        let half = 34.0;
        let color = if *ri == 1 {
            COLOR_POSITIVE
        } else {
            COLOR_NEGATIVE
        };

        let q1_y = scale.map(stats.q1);
        let q3_y = scale.map(stats.q3);
        let median_y = scale.map(stats.median);
        let mean_y = scale.map(stats.mean);
        let whisker_low_y = scale.map(stats.whisker_low);
        let whisker_high_y = scale.map(stats.whisker_high);

        // Whiskers and caps.
        svg.line(center, q1_y, center, whisker_low_y, color, "");
        svg.line(center, q3_y, center, whisker_high_y, color, "");
        svg.line(
            center - half / 2.0,
            whisker_low_y,
            center + half / 2.0,
            whisker_low_y,
            color,
            "",
        );
        svg.line(
            center - half / 2.0,
            whisker_high_y,
            center + half / 2.0,
            whisker_high_y,
            color,
            "",
        );

        // Box with median line and dotted mean line.
        svg.rect(
            center - half,
            q3_y,
            half * 2.0,
            q1_y - q3_y,
            "none",
            &format!(" stroke=\"{color}\" stroke-width=\"1.5\""),
        );
        svg.line(
            center - half,
            median_y,
            center + half,
            median_y,
            color,
            " stroke-width=\"2\"",
        );
        svg.line(
            center - half,
            mean_y,
            center + half,
            mean_y,
            color,
            " stroke-dasharray=\"4 3\"",
        );

        for outlier in &stats.outliers {
            svg.circle(center, scale.map(*outlier), 2.5, color);
        }

        let label = format!("{} {}", language, if *ri == 1 { "RI" } else { "non-RI" });
        svg.text(center, bottom + 24.0, "middle", 11, &label);
    }

    Ok(PlotDocument {
        svg: svg.finish(),
        width,
        height,
    })
}

/// CSV twin of a box plot: one row per group with the summary statistics.
pub fn box_groups_csv(groups: &BoxGroups) -> Result<String, ReportError> {
    let mut out =
        String::from("language,ri,n,mean,median,q1,q3,whisker_low,whisker_high,outliers\n");
    let mut keys: Vec<&(Language, u8)> = groups.keys().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    for key in keys {
        let values = &groups[key];
        if values.is_empty() {
            continue;
        }
        let stats = box_stats(values)?;
        let outliers: Vec<String> = stats.outliers.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            key.0,
            key.1,
            values.len(),
            stats.mean,
            stats.median,
            stats.q1,
            stats.q3,
            stats.whisker_low,
            stats.whisker_high,
            outliers.join(";")
        ));
    }
    Ok(out)
}
