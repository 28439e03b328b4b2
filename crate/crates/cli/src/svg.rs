//! Minimal SVG writer: line plots with axes, and heatmaps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64), xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN / 2.0, H - MARGIN, MARGIN / 2.0 + 10.0);
    let _ = writeln!(
        out,
        r#"<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{x0}" y="{}" text-anchor="middle">{}</text>"#,
        y0 + 16.0,
        tick(x.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{x1}" y="{}" text-anchor="middle">{}</text>"#,
        y0 + 16.0,
        tick(x.1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{y0}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        tick(y.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        y1 + 4.0,
        tick(y.1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    format!("{v:.4}")
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn map(v: f64, (lo, hi): (f64, f64), a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let xr = bounds(series.iter().flat_map(|s| s.x.iter().copied()));
    let yr = bounds(series.iter().flat_map(|s| s.y.iter().copied()));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, xr, yr, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> =
            s.x.iter()
                .zip(s.y)
                .filter(|(_, y)| y.is_finite())
                .map(|(&x, &y)| {
                    format!(
                        "{:.2},{:.2}",
                        map(x, xr, MARGIN, W - MARGIN / 2.0),
                        map(y, yr, H - MARGIN, MARGIN / 2.0 + 10.0)
                    )
                })
                .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
            W - MARGIN / 2.0,
            MARGIN / 2.0 + 24.0 + 14.0 * k as f64,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Grey-scale heatmap; `z[row][col]` with rows along `y`.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64], z: &[Vec<f64>]) -> String {
    let xr = bounds(x.iter().copied());
    let yr = bounds(y.iter().copied());
    let zr = bounds(z.iter().flatten().copied());
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, xr, yr, xlabel, ylabel);
    let cw = (W - 1.5 * MARGIN) / x.len().max(1) as f64;
    let ch = (H - 1.5 * MARGIN - 10.0) / y.len().max(1) as f64;
    for (i, row) in z.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let level = (map(v, zr, 0.0, 255.0)).round().clamp(0.0, 255.0) as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({level},{level},{level})"/>"#,
                MARGIN + j as f64 * cw,
                H - MARGIN - (i + 1) as f64 * ch,
                cw,
                ch
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
