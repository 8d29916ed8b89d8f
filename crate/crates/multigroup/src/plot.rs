//! Minimal SVG plots: axes, series and error bars.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 64.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Tick positions covering `[lo, hi]` at a 1-2-5 step.
pub fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Padded range of `values`, never degenerate.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.08 * (hi - lo) } else { 0.1 * lo.abs().max(1e-3) };
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        H - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(title)
    );
}

fn y_axis(out: &mut String, f: &Frame, label: &str) {
    let (x0, x1) = (LEFT, W - RIGHT);
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{}" stroke="black"/>"#,
        H - BOTTOM
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{b}" x2="{x1}" y2="{b}" stroke="black"/>"#,
        b = H - BOTTOM
    );
    for t in ticks(f.y.0, f.y.1, 5) {
        let y = f.py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0,
            x0 - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let cy = (TOP + H - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy}" text-anchor="middle" transform="rotate(-90 18 {cy})">{}</text>"#,
        escape(label)
    );
}

fn legend(out: &mut String, names: &[String]) {
    for (k, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let x = W - RIGHT + 14.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 9.0,
            PALETTE[k % PALETTE.len()],
            x + 16.0,
            y,
            escape(name)
        );
    }
}

/// One series of an error-bar plot: `(mean, half-width)` per category.
#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    pub name: String,
    pub values: Vec<Option<(f64, f64)>>,
}

/// Means with `±` bars per category; several series are drawn side by side.
pub fn error_bar_svg(title: &str, y_label: &str, categories: &[String], series: &[BarSeries]) -> String {
    let (lo, hi) = range(series.iter().flat_map(|s| {
        s.values
            .iter()
            .flatten()
            .flat_map(|&(m, e)| [m - e, m + e])
    }));
    let f = Frame {
        x: (0.0, categories.len().max(1) as f64),
        y: (lo, hi),
    };
    let mut out = String::new();
    open(&mut out, title);
    y_axis(&mut out, &f, y_label);
    let ns = series.len().max(1) as f64;
    for (c, name) in categories.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="end" transform="rotate(-30 {:.2} {})">{}</text>"#,
            f.px(c as f64 + 0.5),
            H - BOTTOM + 16.0,
            f.px(c as f64 + 0.5),
            H - BOTTOM + 16.0,
            escape(name)
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for (c, v) in s.values.iter().enumerate() {
            let Some((m, e)) = *v else { continue };
            let x = f.px(c as f64 + (k as f64 + 1.0) / (ns + 1.0));
            let (y, y0, y1) = (f.py(m), f.py(m - e), f.py(m + e));
            let _ = writeln!(
                out,
                r#"<g stroke="{color}"><line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}"/><line x1="{:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}"/><line x1="{:.2}" y1="{y1:.2}" x2="{:.2}" y2="{y1:.2}"/></g><circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#,
                x - 4.0,
                x + 4.0,
                x - 4.0,
                x + 4.0
            );
        }
    }
    legend(&mut out, &series.iter().map(|s| s.name.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw as a dashed line.
    pub dashed: bool,
}

pub fn line_svg(title: &str, x_label: &str, y_label: &str, series: &[LineSeries]) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let f = Frame {
        x: range(pts().map(|p| p.0)),
        y: range(pts().map(|p| p.1)),
    };
    let mut out = String::new();
    open(&mut out, title);
    y_axis(&mut out, &f, y_label);
    for t in ticks(f.x.0, f.x.1, 6) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            f.px(t),
            H - BOTTOM + 18.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 16.0,
        escape(x_label)
    );
    for (k, s) in series.iter().enumerate() {
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            path.join(" ")
        );
    }
    legend(&mut out, &series.iter().map(|s| s.name.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        let labels = |t: Vec<f64>| t.into_iter().map(fmt_tick).collect::<Vec<_>>();
        assert_eq!(labels(ticks(0.0, 1.0, 5)), ["0", "0.2", "0.4", "0.6", "0.8", "1"]);
        assert_eq!(labels(ticks(0.03, 0.061, 3)), ["0.04", "0.06"]);
    }

    #[test]
    fn error_bars_render() {
        let s = error_bar_svg(
            "t <1>",
            "loss",
            &["a".into(), "b".into()],
            &[BarSeries {
                name: "total".into(),
                values: vec![Some((0.1, 0.01)), None],
            }],
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 1);
        assert!(s.contains("t &lt;1&gt;"));
    }

    #[test]
    fn lines_render() {
        let s = line_svg(
            "fit",
            "x",
            "y",
            &[LineSeries {
                name: "truth".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0)],
                dashed: true,
            }],
        );
        assert_eq!(s.matches("<polyline").count(), 1);
    }
}
