//! Deterministic SVG scatter plots of 2-D projections.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use vitscope_core::Matrix;

/// tab20.
pub const DEFAULT_PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];

const MARGIN: f64 = 20.0;
const LEGEND_WIDTH: f64 = 150.0;
const LEGEND_ROW: f64 = 18.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSpec {
    pub width: u32,
    pub height: u32,
    pub radius: f64,
    /// One color per cluster, in ascending cluster-id order. Empty selects
    /// [`DEFAULT_PALETTE`], extended with evenly spaced hues when needed.
    pub palette: Vec<String>,
    pub highlight: BTreeSet<u64>,
}

impl Default for ScatterSpec {
    fn default() -> Self {
        Self {
            width: 800,
            height: 600,
            radius: 3.0,
            palette: Vec::new(),
            highlight: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlotError {
    #[error("scatter plots need a 2-D projection, found {found} dimensions")]
    Dimension { found: usize },
    #[error("palette has {colors} colors for {clusters} clusters")]
    Palette { colors: usize, clusters: usize },
    #[error("{points} points, {labels} labels and {ids} record ids")]
    Alignment { points: usize, labels: usize, ids: usize },
}

fn palette(spec: &ScatterSpec, clusters: usize) -> Result<Vec<String>, PlotError> {
    if !spec.palette.is_empty() {
        if spec.palette.len() < clusters {
            return Err(PlotError::Palette {
                colors: spec.palette.len(),
                clusters,
            });
        }
        return Ok(spec.palette.clone());
    }
    let mut out: Vec<String> = DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect();
    let extra = clusters.saturating_sub(out.len());
    for i in 0..extra {
        let hue = (i as f64 * 360.0 / extra as f64).round();
        out.push(format!("hsl({hue},60%,45%)"));
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one marker per row of `points`, colored by `labels`, with a
/// legend of cluster ids and sizes and a ring around highlighted records.
pub fn render_svg(points: &Matrix<f64>, labels: &[usize], record_ids: &[u64], spec: &ScatterSpec) -> Result<String, PlotError> {
    if points.cols() != 2 {
        return Err(PlotError::Dimension { found: points.cols() });
    }
    if labels.len() != points.rows() || record_ids.len() != points.rows() {
        return Err(PlotError::Alignment {
            points: points.rows(),
            labels: labels.len(),
            ids: record_ids.len(),
        });
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *sizes.entry(l).or_default() += 1;
    }
    let colors = palette(spec, sizes.len())?;
    let color_of: BTreeMap<usize, &str> = sizes.keys().zip(&colors).map(|(&l, c)| (l, c.as_str())).collect();

    let (w, h) = (f64::from(spec.width), f64::from(spec.height));
    let legend = if points.rows() > 0 { LEGEND_WIDTH } else { 0.0 };
    let plot_w = (w - legend - 2.0 * MARGIN).max(1.0);
    let plot_h = (h - 2.0 * MARGIN).max(1.0);
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points.iter_rows() {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    let span_x = if max_x > min_x { max_x - min_x } else { 1.0 };
    let span_y = if max_y > min_y { max_y - min_y } else { 1.0 };
    let sx = |x: f64| MARGIN + (x - min_x) / span_x * plot_w;
    let sy = |y: f64| MARGIN + (max_y - y) / span_y * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<g class="points">"#);
    for (i, p) in points.iter_rows().enumerate() {
        let _ = writeln!(
            svg,
            r#"<circle class="point" data-id="{}" data-cluster="{}" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{}"/>"#,
            record_ids[i],
            labels[i],
            sx(p[0]),
            sy(p[1]),
            spec.radius,
            color_of[&labels[i]]
        );
    }
    let _ = writeln!(svg, "</g>");
    let ringed: Vec<usize> = (0..points.rows()).filter(|&i| spec.highlight.contains(&record_ids[i])).collect();
    if !ringed.is_empty() {
        let _ = writeln!(svg, r#"<g class="highlight">"#);
        for i in ringed {
            let p = points.row(i);
            let _ = writeln!(
                svg,
                r##"<circle class="ring" data-id="{}" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#000000" stroke-width="1.5"/>"##,
                record_ids[i],
                sx(p[0]),
                sy(p[1]),
                spec.radius + 2.5
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    if points.rows() > 0 {
        let x0 = w - legend;
        let _ = writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
        for (row, (label, size)) in sizes.iter().enumerate() {
            let y = MARGIN + row as f64 * LEGEND_ROW;
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                x0,
                y,
                color_of[label],
                x0 + 16.0,
                y + 9.0,
                escape(&format!("cluster {label} (n={size})"))
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four() -> Matrix<f64> {
        Matrix::from_rows(2, [[0.0, 0.0], [1.0, 0.0], [10.0, 1.0], [11.0, 1.0]]).unwrap()
    }

    #[test]
    fn counts_markers_and_legend_entries() {
        let svg = render_svg(&four(), &[0, 0, 1, 1], &[5, 6, 7, 8], &ScatterSpec::default()).unwrap();
        assert_eq!(svg.matches(r#"class="point""#).count(), 4);
        assert_eq!(svg.matches("<rect x=").count(), 2);
        assert!(svg.contains("cluster 0 (n=2)"));
        assert!(!svg.contains("ring"));
    }

    #[test]
    fn empty_plot_omits_legend() {
        let svg = render_svg(&Matrix::zeros(0, 2), &[], &[], &ScatterSpec::default()).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("legend"));
        assert!(!svg.contains(r#"class="point""#));
    }

    #[test]
    fn highlight_draws_ring() {
        let spec = ScatterSpec {
            highlight: [7].into_iter().collect(),
            ..ScatterSpec::default()
        };
        let svg = render_svg(&four(), &[0, 0, 1, 1], &[5, 6, 7, 8], &spec).unwrap();
        assert_eq!(svg.matches(r#"class="ring""#).count(), 1);
        assert!(svg.contains(r#"class="ring" data-id="7""#));
    }

    #[test]
    fn errors() {
        assert_eq!(
            render_svg(&Matrix::zeros(3, 3), &[0; 3], &[0; 3], &ScatterSpec::default()),
            Err(PlotError::Dimension { found: 3 })
        );
        let spec = ScatterSpec {
            palette: vec!["#000".into()],
            ..ScatterSpec::default()
        };
        assert!(matches!(
            render_svg(&four(), &[0, 0, 1, 1], &[1, 2, 3, 4], &spec),
            Err(PlotError::Palette { colors: 1, clusters: 2 })
        ));
    }
}
