//! Figure-style outputs: self-contained SVG plus a CSV of the plotted
//! series. Output bytes are deterministic; rendering the same report
//! twice produces identical files.

use crate::error::PlanError;
use crate::metrics::{histogram, CorrelationResult, CuCsiGrid};
use crate::report::MetricReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 56.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderKind {
    Histogram,
    Scatter,
    GridHeatmap,
    Line,
}

impl RenderKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "histogram" => Some(Self::Histogram),
            "scatter" => Some(Self::Scatter),
            "grid-heatmap" | "heatmap" => Some(Self::GridHeatmap),
            "line" => Some(Self::Line),
            _ => None,
        }
    }
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e12 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() || s == "-" {
            "0".into()
        } else {
            s
        }
    }
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        };
        let (x_lo, x_hi) = pad(x_lo, x_hi);
        let (y_lo, y_hi) = pad(y_lo, y_hi);
        Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT
            + (v - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (v - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" ",
            "font-size=\"14\" font-weight=\"bold\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        tx = WIDTH / 2.0,
        title = title
    )
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = frame.x_lo + t * (frame.x_hi - frame.x_lo);
        let yv = frame.y_lo + t * (frame.y_hi - frame.y_lo);
        let xp = frame.x(xv);
        let yp = frame.y(yv);
        s.push_str(&format!(
            "<line x1=\"{xp:.2}\" y1=\"{y0}\" x2=\"{xp:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{xp:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            y0 + 18.0,
            fmt_num(xv)
        ));
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yp:.2}\" x2=\"{x0}\" y2=\"{yp:.2}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            x0 - 8.0,
            yp + 4.0,
            fmt_num(yv)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{x_label}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));
    s
}

/// Histogram of a report's primary per-sample values.
pub fn render_histogram(
    report: &MetricReport,
    n_bins: usize,
) -> Result<(String, String), PlanError> {
    let values: Vec<f64> = report.primary_values().iter().map(|&(_, v)| v).collect();
    if values.is_empty() {
        return Err(PlanError::Unrenderable {
            kind: "histogram",
            detail: "report has no per-sample values".into(),
        });
    }
    let hist =
        histogram(&values, n_bins.max(1), None, None).map_err(|e| PlanError::Unrenderable {
            kind: "histogram",
            detail: e.to_string(),
        })?;
    let max_count = hist.counts.iter().copied().max().unwrap_or(0) as f64;
    let frame = Frame::new(hist.lo, hist.hi(), 0.0, max_count);
    let mut svg = svg_open(&format!("{} distribution", report.metric_name));
    svg.push_str(&axes(&frame, &report.metric_name, "count"));
    for (k, &count) in hist.counts.iter().enumerate() {
        let lo = hist.lo + k as f64 * hist.bin_width;
        let x = frame.x(lo);
        let w = frame.x(lo + hist.bin_width) - x;
        let y = frame.y(count as f64);
        let h = frame.y(0.0) - y;
        svg.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"#47a3ff\" stroke=\"white\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    let mut csv = String::from("bin_lo,bin_hi,count\n");
    for (k, &count) in hist.counts.iter().enumerate() {
        let lo = hist.lo + k as f64 * hist.bin_width;
        csv.push_str(&format!("{},{},{count}\n", lo, lo + hist.bin_width));
    }
    Ok((svg, csv))
}

/// Scatter plot with an optional fitted line drawn in red.
pub fn render_scatter(
    points: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
    fit: Option<&CorrelationResult>,
) -> Result<(String, String), PlanError> {
    if points.is_empty() {
        return Err(PlanError::Unrenderable {
            kind: "scatter",
            detail: "no points".into(),
        });
    }
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let frame = Frame::new(x_lo, x_hi, y_lo, y_hi);
    let mut svg = svg_open(&format!("{y_label} vs {x_label}"));
    svg.push_str(&axes(&frame, x_label, y_label));
    for &(x, y) in points {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"#47a3ff\" fill-opacity=\"0.7\"/>\n",
            frame.x(x),
            frame.y(y)
        ));
    }
    if let Some(fit) = fit {
        let y_at = |x: f64| fit.slope * x + fit.intercept;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"red\" stroke-width=\"1.5\"/>\n",
            frame.x(frame.x_lo),
            frame.y(y_at(frame.x_lo)),
            frame.x(frame.x_hi),
            frame.y(y_at(frame.x_hi))
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"red\">r = {}</text>\n",
            WIDTH - MARGIN_RIGHT - 4.0,
            MARGIN_TOP + 12.0,
            fmt_num(fit.pearson_r)
        ));
    }
    svg.push_str("</svg>\n");
    let mut csv = format!("{x_label},{y_label}\n");
    for &(x, y) in points {
        csv.push_str(&format!("{x},{y}\n"));
    }
    Ok((svg, csv))
}

/// Line chart of (x, y) pairs in x order.
pub fn render_line(
    series: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
) -> Result<(String, String), PlanError> {
    if series.is_empty() {
        return Err(PlanError::Unrenderable {
            kind: "line",
            detail: "no points".into(),
        });
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite x"));
    let (x_lo, x_hi) = (sorted[0].0, sorted[sorted.len() - 1].0);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, y) in &sorted {
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let frame = Frame::new(x_lo, x_hi, y_lo.min(0.0), y_hi);
    let mut svg = svg_open(&format!("{y_label} over {x_label}"));
    svg.push_str(&axes(&frame, x_label, y_label));
    let path: Vec<String> = sorted
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            format!(
                "{}{:.2},{:.2}",
                if i == 0 { "M" } else { "L" },
                frame.x(x),
                frame.y(y)
            )
        })
        .collect();
    svg.push_str(&format!(
        "<path d=\"{}\" fill=\"none\" stroke=\"#47a3ff\" stroke-width=\"1.5\"/>\n",
        path.join(" ")
    ));
    svg.push_str("</svg>\n");
    let mut csv = format!("{x_label},{y_label}\n");
    for &(x, y) in &sorted {
        csv.push_str(&format!("{x},{y}\n"));
    }
    Ok((svg, csv))
}

/// Lead-time x CSI-bin heatmap of a CuCSI grid.
pub fn render_heatmap(grid: &CuCsiGrid) -> Result<(String, String), PlanError> {
    if grid.counts.is_empty() {
        return Err(PlanError::Unrenderable {
            kind: "grid-heatmap",
            detail: "grid has no lead rows".into(),
        });
    }
    let leads = grid.counts.len();
    let bins = grid.n_bins;
    let max_count = grid
        .counts
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let frame = Frame::new(0.0, leads as f64, 0.0, bins as f64);
    let mut svg = svg_open(&format!("cumulative CSI, T = {}", fmt_num(grid.threshold)));
    svg.push_str(&axes(&frame, "lead time", "CSI bin"));
    for (lead, row) in grid.counts.iter().enumerate() {
        for (bin, &count) in row.iter().enumerate() {
            let x = frame.x(lead as f64);
            let w = frame.x(lead as f64 + 1.0) - x;
            let y = frame.y(bin as f64 + 1.0);
            let h = frame.y(bin as f64) - y;
            // White at zero through full blue at the grid maximum.
            let t = count as f64 / max_count;
            let r = (255.0 - t * 208.0) as u8;
            let g = (255.0 - t * 92.0) as u8;
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"rgb({r},{g},255)\"/>\n"
            ));
        }
    }
    svg.push_str("</svg>\n");
    let mut csv = String::from("lead,bin,csi_lo,count\n");
    for (lead, row) in grid.counts.iter().enumerate() {
        for (bin, &count) in row.iter().enumerate() {
            csv.push_str(&format!(
                "{lead},{bin},{},{count}\n",
                bin as f64 * grid.step
            ));
        }
    }
    Ok((svg, csv))
}

/// Render a report as the requested kind.
///
/// - histogram: primary per-sample values, 16 bins
/// - scatter: reports whose samples carry two values (pairs)
/// - line: primary value over sample id
/// - grid-heatmap: reports carrying a CuCSI grid in `params["grid"]`
pub fn render_report(
    report: &MetricReport,
    kind: RenderKind,
) -> Result<(String, String), PlanError> {
    match kind {
        RenderKind::Histogram => render_histogram(report, 16),
        RenderKind::Line => {
            let series: Vec<(f64, f64)> = report
                .primary_values()
                .iter()
                .map(|&(id, v)| (id as f64, v))
                .collect();
            if series.is_empty() {
                return Err(PlanError::Unrenderable {
                    kind: "line",
                    detail: "report has no per-sample values".into(),
                });
            }
            render_line(&series, "sample id", &report.metric_name)
        }
        RenderKind::Scatter => {
            let points: Vec<(f64, f64)> = report
                .per_sample
                .values()
                .filter(|v| v.len() >= 2)
                .map(|v| (v[0], v[1]))
                .collect();
            if points.is_empty() {
                return Err(PlanError::Unrenderable {
                    kind: "scatter",
                    detail: "report samples do not carry value pairs".into(),
                });
            }
            render_scatter(
                &points,
                &format!("{} [0]", report.metric_name),
                &format!("{} [1]", report.metric_name),
                None,
            )
        }
        RenderKind::GridHeatmap => {
            let grid_value = report.params.get("grid").ok_or(PlanError::Unrenderable {
                kind: "grid-heatmap",
                detail: "report carries no grid param".into(),
            })?;
            let grid: CuCsiGrid = serde_json::from_value(grid_value.clone()).map_err(|e| {
                PlanError::Unrenderable {
                    kind: "grid-heatmap",
                    detail: e.to_string(),
                }
            })?;
            render_heatmap(&grid)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn report_with(values: &[(i64, Vec<f64>)]) -> MetricReport {
        let per_sample: BTreeMap<i64, Vec<f64>> = values.iter().cloned().collect();
        MetricReport::from_per_sample("mae", BTreeMap::new(), None, per_sample)
    }

    #[test]
    fn rendering_twice_is_byte_identical() {
        let report = report_with(&[(0, vec![1.0]), (1, vec![2.0]), (2, vec![1.5])]);
        let a = render_report(&report, RenderKind::Histogram).unwrap();
        let b = render_report(&report, RenderKind::Histogram).unwrap();
        assert_eq!(a, b);
        assert!(a.0.starts_with("<svg"));
        assert!(a.0.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_report_is_unrenderable() {
        let report = report_with(&[]);
        assert!(matches!(
            render_report(&report, RenderKind::Histogram),
            Err(PlanError::Unrenderable { .. })
        ));
    }

    #[test]
    fn heatmap_needs_grid_param() {
        let report = report_with(&[(0, vec![1.0])]);
        assert!(matches!(
            render_report(&report, RenderKind::GridHeatmap),
            Err(PlanError::Unrenderable { .. })
        ));
    }

    #[test]
    fn heatmap_renders_grid_with_axis_labels() {
        let grid = CuCsiGrid {
            schema_version: 1,
            threshold: 16.0,
            n_bins: 4,
            step: 0.25,
            counts: vec![vec![1, 0, 0, 2], vec![0, 3, 0, 0]],
            considered: 3,
        };
        let (svg, csv) = render_heatmap(&grid).unwrap();
        assert!(svg.contains("lead time"));
        assert!(svg.contains("CSI bin"));
        assert!(csv.lines().count() == 1 + 8);
    }

    #[test]
    fn scatter_includes_fit_line() {
        let points = vec![(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)];
        let fit = crate::metrics::pearson_linfit("x", "y", &points).unwrap();
        let (svg, csv) = render_scatter(&points, "x", "y", Some(&fit)).unwrap();
        assert!(svg.contains("stroke=\"red\""));
        assert!(csv.starts_with("x,y\n"));
    }

    #[test]
    fn line_orders_by_x() {
        let (_, csv) = render_line(&[(2.0, 1.0), (0.0, 5.0), (1.0, 3.0)], "t", "v").unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows, vec!["0,5", "1,3", "2,1"]);
    }
}
