//! CSV tables and a minimal log-log SVG plot.

use std::fmt::Write;

use super::{DkwRow, RateResult, RatioRow};

/// Rows `n,rep,W,objective,m_hat,seconds`.
pub fn rate_csv(result: &RateResult) -> String {
    let mut out = String::from("n,rep,W,objective,m_hat,seconds\n");
    for r in &result.rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.n, r.rep, r.w, r.objective, r.m_hat, r.seconds);
    }
    out
}

/// Rows `eps,sup_dist,wasserstein,ratio`.
pub fn ratio_csv(rows: &[RatioRow]) -> String {
    let mut out = String::from("eps,sup_dist,wasserstein,ratio\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.eps, r.sup_dist, r.wasserstein, r.ratio);
    }
    out
}

/// Rows `z,bound,exceedances,reps,frequency,stderr`.
pub fn dkw_csv(rows: &[DkwRow]) -> String {
    let mut out = String::from("z,bound,exceedances,reps,frequency,stderr\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.z, r.bound, r.exceedances, r.reps, r.frequency, r.stderr);
    }
    out
}

pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Static SVG of each series on log-log axes; nonpositive points are
/// skipped.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[PlotSeries]) -> String {
    let (w, h, margin) = (640.0, 420.0, 60.0);
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let lx = |v: f64| v.log10();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        x0 = x0.min(lx(x));
        x1 = x1.max(lx(x));
        y0 = y0.min(lx(y));
        y1 = y1.max(lx(y));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let px = |x: f64| margin + (lx(x) - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (lx(y) - y0) / (y1 - y0) * (h - 2.0 * margin);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    for e in (x0 as i32)..=(x1 as i32) {
        let x = px(10f64.powi(e));
        let _ = writeln!(svg, r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#ddd"/>"##, margin, h - margin);
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">1e{e}</text>"#, h - margin + 16.0);
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(e));
        let _ = writeln!(svg, r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, margin, w - margin);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">1e{e}</text>"#, margin - 6.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 16.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        for c in &coords {
            let (cx, cy) = c.split_once(',').unwrap();
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - margin - 150.0,
            margin + 16.0 * (i as f64 + 1.0),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
