//! Self-contained SVG line plots of sweep results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::harness::SimRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `log10(BER)` against the sweep axis.
    Ber,
    /// Throughput and Shannon capacity in kbit/s against the sweep axis.
    Throughput,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn series(records: &[SimRecord], kind: PlotKind) -> Vec<Series> {
    let mut groups: BTreeMap<(String, u8), Vec<&SimRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.axis_db.is_finite()) {
        groups.entry((r.scheme.to_string(), r.sf.sf())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((scheme, sf), recs) in groups {
        match kind {
            PlotKind::Ber => out.push(Series {
                label: format!("{scheme} SF{sf}"),
                points: recs
                    .iter()
                    .filter(|r| r.ber > 0.0)
                    .map(|r| (r.axis_db, r.ber.log10()))
                    .collect(),
                dashed: false,
            }),
            PlotKind::Throughput => {
                out.push(Series {
                    label: format!("{scheme} SF{sf}"),
                    points: recs.iter().map(|r| (r.axis_db, r.throughput_bps / 1e3)).collect(),
                    dashed: false,
                });
                out.push(Series {
                    label: format!("Shannon SF{sf}"),
                    points: recs.iter().map(|r| (r.axis_db, r.shannon_bps / 1e3)).collect(),
                    dashed: true,
                });
            }
        }
    }
    out.retain(|s| !s.points.is_empty());
    out
}

fn bounds(all: &[Series]) -> Option<((f64, f64), (f64, f64))> {
    let pts = all.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        return None;
    }
    if x1 - x0 < 1e-9 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    Some(((x0, x1), (y0, y1)))
}

/// Renders records as an SVG document.
pub fn render_svg(records: &[SimRecord], kind: PlotKind) -> String {
    let all = series(records, kind);
    let axis_name = records.first().map_or("dB", |r| r.axis.name());
    let y_label = match kind {
        PlotKind::Ber => "log10(BER)",
        PlotKind::Throughput => "throughput (kbit/s)",
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let Some(((x0, x1), (mut y0, mut y1))) = bounds(&all) else {
        let _ = writeln!(svg, r#"<text x="{}" y="{}">no data</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    };
    if kind == PlotKind::Ber {
        y0 = y0.floor();
        y1 = y1.ceil().min(0.0).max(y0 + 1.0);
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;

    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}</text>"#,
            sx(fx),
            HEIGHT - MARGIN + 18.0,
            fx
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            MARGIN,
            sy(fy),
            WIDTH - MARGIN,
            sy(fy)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            MARGIN - 6.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{axis_name} (dB)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (i, s) in all.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            path.join(" ")
        );
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN - 8.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::harness::run_ber;

    #[test]
    fn renders_lines_per_series() {
        let cfg = SimConfig {
            points_db: vec![0.0, 2.0, 4.0],
            max_frames: 64,
            ..SimConfig::default()
        };
        let recs = run_ber(&cfg).unwrap();
        let svg = render_svg(&recs, PlotKind::Ber);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("iqcss SF6"));

        let tp = render_svg(&recs, PlotKind::Throughput);
        assert_eq!(tp.matches("<polyline").count(), 4);
        assert_eq!(tp.matches("stroke-dasharray").count(), 2);
    }

    #[test]
    fn empty_plot() {
        assert!(render_svg(&[], PlotKind::Ber).contains("no data"));
    }
}
