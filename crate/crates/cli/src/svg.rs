//! Log-log line plots on a fixed 800×600 canvas.

use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Index into the palette; a curve and its bound share one.
    pub color: usize,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Points with a non-positive coordinate cannot sit on log axes and are
/// dropped.
pub fn render(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let visible: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .copied()
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
                .collect()
        })
        .collect();
    let all = visible.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |lx: f64| LEFT + (lx - x0) / (x1 - x0) * plot_w;
    let py = |ly: f64| TOP + (y1 - ly) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    // decade grid and tick labels
    let mut d = x0;
    while d <= x1 + 1e-9 {
        let x = px(d);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, TOP + plot_h);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{}</text>"#, TOP + plot_h + 18.0, d as i64);
        d += 1.0;
    }
    let mut d = y0;
    while d <= y1 + 1e-9 {
        let y = py(d);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + plot_w);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{}</text>"#, LEFT - 6.0, y + 4.0, d as i64);
        d += 1.0;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );

    for (s, pts) in series.iter().zip(&visible) {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[s.color % PALETTE.len()];
        let coords: Vec<String> =
            pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(x.log10()), py(y.log10()))).collect();
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(&s.label)
        );
    }

    let mut ly = TOP + 16.0;
    for s in series.iter().filter(|s| !s.dashed) {
        let color = PALETTE[s.color % PALETTE.len()];
        let lx = LEFT + plot_w - 300.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
        ly += 16.0;
    }
    if series.iter().any(|s| s.dashed) {
        let lx = LEFT + plot_w - 300.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="gray" stroke-dasharray="6,4"/>"#,
            lx + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">theorem bound</text>"#, lx + 26.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dashed_series_and_dropped_points() {
        let s = vec![
            Series { label: "a<b".into(), points: vec![(0.0, 1.0), (1.0, 1.0), (10.0, 0.1)], dashed: false, color: 0 },
            Series { label: "bound".into(), points: vec![(1.0, 2.0), (10.0, 0.2)], dashed: true, color: 0 },
        ];
        let svg = render("t", "k", "gap", &s);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"width="800" height="600""#));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray=\"6,4\" points"));
        assert!(svg.contains("a&lt;b"));
    }
}
