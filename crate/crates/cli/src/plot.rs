//! Minimal SVG line chart for training curves.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

/// Renders `series` against epoch index. Values are plotted on a shared
/// linear y axis starting at zero.
pub fn line_chart(title: &str, y_label: &str, series: &[Series]) -> String {
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let y_max = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max)
        .max(1e-12)
        * 1.05;
    let x_span = (n.max(2) - 1) as f64;
    let px = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / x_span;
    let py = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v / y_max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">epoch</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="10">{v:.2}</text>"#, x0 - 4.0, py(v) + 3.0);
    }
    for i in 0..n {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="10">{i}</text>"#, px(i), y0 + 14.0);
    }
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            escape(s.label),
            s.color,
            points.join(" ")
        );
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#, x1 - 110.0, x1 - 90.0, s.color);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, x1 - 84.0, ly + 4.0, escape(s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
