//! Self-contained SVG line chart of an empirical tail against bound curves.

use std::fmt::Write;

use crate::walk::TailEstimate;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

/// A named curve of `(ϑ, probability)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
}

impl Frame {
    fn x(&self, theta: f64) -> f64 {
        LEFT + (theta - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - LEFT - RIGHT)
    }

    /// Probabilities below the floor (including 0) sit on the bottom edge.
    fn y(&self, p: f64) -> f64 {
        let l = if p > 0.0 { p.log10().max(self.y_lo) } else { self.y_lo };
        let l = l.min(0.0);
        TOP + l / self.y_lo * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(f: &Frame, pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|&(t, p)| format!("{:.2},{:.2}", f.x(t), f.y(p)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `log10 P(stat ≥ ϑ)` against `ϑ`: the Wilson band as a filled polygon,
/// the empirical frequencies, and one line per bound series. The y axis
/// spans whole decades down to one decade below the smallest resolvable
/// probability `1/trials`.
pub fn tail_chart(tail: &TailEstimate<f64>, series: &[ChartSeries], title: &str) -> String {
    let thetas = &tail.thresholds;
    let (mut x_lo, mut x_hi) = thetas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    if !(x_lo.is_finite() && x_hi.is_finite()) {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let y_lo = (1.0 / tail.trials.max(1) as f64).log10().floor() - 1.0;
    let f = Frame { x_lo, x_hi, y_lo };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );

    // Axes, decade grid and x ticks.
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    for decade in (y_lo as i32)..=0 {
        let y = f.y(10f64.powi(decade));
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            x0 - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let t = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let x = f.x(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y1 + 5.0,
            y1 + 19.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<polyline points="{x0:.2},{y0:.2} {x0:.2},{y1:.2} {x1:.2},{y1:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">threshold</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">log10 probability</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    // Wilson band: upper edge left to right, lower edge back.
    let mut band: Vec<(f64, f64)> = thetas.iter().copied().zip(tail.ci_high.iter().copied()).collect();
    band.extend(thetas.iter().copied().zip(tail.ci_low.iter().copied()).rev());
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
        polyline(&f, &band)
    );
    let empirical: Vec<(f64, f64)> = thetas.iter().copied().zip(tail.probabilities.iter().copied()).collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        polyline(&f, &empirical)
    );
    for (k, s) in series.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5" stroke-dasharray="6 3"/>"#,
            polyline(&f, &s.points),
            PALETTE[k % PALETTE.len()]
        );
    }

    // Legend.
    let lx = WIDTH - RIGHT + 12.0;
    let mut ly = TOP + 6.0;
    let _ = writeln!(
        out,
        r##"<rect x="{lx:.2}" y="{:.2}" width="18" height="10" fill="#1f77b4" fill-opacity="0.2"/><text x="{:.2}" y="{:.2}">empirical (95% CI)</text>"##,
        ly - 9.0,
        lx + 24.0,
        ly
    );
    for (k, s) in series.iter().enumerate() {
        ly += 18.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5" stroke-dasharray="6 3"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            PALETTE[k % PALETTE.len()],
            lx + 24.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn format_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
