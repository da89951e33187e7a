//! Minimal deterministic SVG charts.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#9467bd", "#2ca02c", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear map from data range to pixel range.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if (d1 - d0).abs() < 1e-12 {
            (d0 - 0.5, d1 + 0.5)
        } else {
            (d0, d1)
        };
        Self { d0, d1, p0, p1 }
    }

    fn at(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-3);
    (lo - pad, hi + pad)
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            width / 2.0,
            esc(title)
        );
        Self { out }
    }

    fn axes(&mut self, x: Scale, y: Scale, x_label: &str, y_label: &str, x_ticks: &[(f64, String)]) {
        let o = &mut self.out;
        let _ = writeln!(
            o,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#333"/>"##,
            x.p0, y.p0, x.p1, y.p0
        );
        let _ = writeln!(
            o,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#333"/>"##,
            x.p0, y.p0, x.p0, y.p1
        );
        for (v, label) in x_ticks {
            let px = x.at(*v);
            let _ = writeln!(
                o,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                y.p0 + 16.0,
                esc(label)
            );
        }
        for k in 0..=4 {
            let v = y.d0 + (y.d1 - y.d0) * k as f64 / 4.0;
            let py = y.at(v);
            let _ = writeln!(
                o,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/>"##,
                x.p0, x.p1
            );
            let _ = writeln!(
                o,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
                x.p0 - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (x.p0 + x.p1) / 2.0,
            y.p0 + 36.0,
            esc(x_label)
        );
        let _ = writeln!(
            o,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (y.p0 + y.p1) / 2.0,
            (y.p0 + y.p1) / 2.0,
            esc(y_label)
        );
    }

    fn legend(&mut self, x: f64, entries: &[(String, &str)]) {
        for (i, (name, c)) in entries.iter().enumerate() {
            let y = TOP + 10.0 + 18.0 * i as f64;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{c}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                y - 10.0,
                x + 18.0,
                y,
                esc(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    /// `(x, y)` points in drawing order.
    pub points: Vec<(f64, f64)>,
}

/// Polyline chart with markers; x ticks at the given positions.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    x_ticks: &[(f64, String)],
    series: &[Series],
) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x0, x1) = padded_range(xs.chain(x_ticks.iter().map(|t| t.0)));
    let (y0, y1) = padded_range(ys);
    let x = Scale::new(x0, x1, LEFT, W - RIGHT);
    let y = Scale::new(y0, y1, H - BOTTOM, TOP);
    let mut c = Canvas::new(W, H, title);
    c.axes(x, y, x_label, y_label, x_ticks);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(a, b)| format!("{:.1},{:.1}", x.at(a), y.at(b)))
            .collect();
        let _ = writeln!(
            c.out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            pts.join(" "),
            color(i)
        );
        for &(a, b) in &s.points {
            let _ = writeln!(
                c.out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                x.at(a),
                y.at(b),
                color(i)
            );
        }
    }
    let entries: Vec<(String, &str)> = series
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.clone(), color(i)))
        .collect();
    c.legend(W - RIGHT + 16.0, &entries);
    c.finish()
}

/// Grouped bars: `values[s][g]` is series `s` in category `g`.
pub fn bar_chart(
    title: &str,
    y_label: &str,
    categories: &[String],
    series_names: &[String],
    values: &[Vec<f64>],
) -> String {
    let (mut y0, y1) = padded_range(values.iter().flatten().copied());
    y0 = y0.max(0.0);
    let x = Scale::new(0.0, categories.len() as f64, LEFT, W - RIGHT);
    let y = Scale::new(y0, y1, H - BOTTOM, TOP);
    let ticks: Vec<(f64, String)> = categories
        .iter()
        .enumerate()
        .map(|(i, c)| (i as f64 + 0.5, c.clone()))
        .collect();
    let mut c = Canvas::new(W, H, title);
    c.axes(x, y, "group", y_label, &ticks);
    let n = series_names.len().max(1) as f64;
    let slot = (x.at(1.0) - x.at(0.0)) * 0.8;
    let bw = slot / n;
    for (s, row) in values.iter().enumerate() {
        for (g, &v) in row.iter().enumerate() {
            let px = x.at(g as f64) + (x.at(1.0) - x.at(0.0)) * 0.1 + bw * s as f64;
            let top = y.at(v);
            let _ = writeln!(
                c.out,
                r#"<rect x="{px:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                bw * 0.9,
                (y.p0 - top).max(0.0),
                color(s)
            );
        }
    }
    let entries: Vec<(String, &str)> = series_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), color(i)))
        .collect();
    c.legend(W - RIGHT + 16.0, &entries);
    c.finish()
}

/// Mean line with a shaded `mean +- std` band.
pub fn band_chart(title: &str, x_label: &str, y_label: &str, xs: &[f64], mean: &[f64], std: &[f64]) -> String {
    let lo: Vec<f64> = mean.iter().zip(std).map(|(m, s)| m - s).collect();
    let hi: Vec<f64> = mean.iter().zip(std).map(|(m, s)| m + s).collect();
    let (x0, x1) = padded_range(xs.iter().copied());
    let (y0, y1) = padded_range(lo.iter().chain(&hi).copied());
    let x = Scale::new(x0, x1, LEFT, W - RIGHT);
    let y = Scale::new(y0, y1, H - BOTTOM, TOP);
    let ticks: Vec<(f64, String)> = (0..=4)
        .map(|k| {
            let v = xs.first().copied().unwrap_or(0.0)
                + (xs.last().copied().unwrap_or(1.0) - xs.first().copied().unwrap_or(0.0)) * k as f64 / 4.0;
            (v, format!("{v:.0}"))
        })
        .collect();
    let mut c = Canvas::new(W, H, title);
    c.axes(x, y, x_label, y_label, &ticks);
    let upper: Vec<String> = xs.iter().zip(&hi).map(|(&a, &b)| format!("{:.1},{:.1}", x.at(a), y.at(b))).collect();
    let lower: Vec<String> = xs
        .iter()
        .zip(&lo)
        .rev()
        .map(|(&a, &b)| format!("{:.1},{:.1}", x.at(a), y.at(b)))
        .collect();
    let _ = writeln!(
        c.out,
        r#"<polygon points="{} {}" fill="{}" fill-opacity="0.25" stroke="none"/>"#,
        upper.join(" "),
        lower.join(" "),
        color(0)
    );
    let line: Vec<String> = xs.iter().zip(mean).map(|(&a, &b)| format!("{:.1},{:.1}", x.at(a), y.at(b))).collect();
    let _ = writeln!(
        c.out,
        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
        line.join(" "),
        color(0)
    );
    c.legend(
        W - RIGHT + 16.0,
        &[("mean".to_string(), color(0)), ("mean \u{b1} std".to_string(), "#aec7e8")],
    );
    c.finish()
}

/// One scatter panel: points colored by label.
pub struct Panel {
    pub title: String,
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
}

/// Grid of scatter panels sharing one coordinate range per row.
pub fn scatter_grid(title: &str, rows: &[Vec<Panel>]) -> String {
    let side = 200.0;
    let gap = 24.0;
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width = gap + cols as f64 * (side + gap);
    let height = 40.0 + rows.len() as f64 * (side + gap + 16.0);
    let mut c = Canvas::new(width, height, title);
    for (r, row) in rows.iter().enumerate() {
        let (x0, x1) = padded_range(row.iter().flat_map(|p| p.points.iter().map(|q| q[0])));
        let (y0, y1) = padded_range(row.iter().flat_map(|p| p.points.iter().map(|q| q[1])));
        for (k, panel) in row.iter().enumerate() {
            let left = gap + k as f64 * (side + gap);
            let top = 40.0 + r as f64 * (side + gap + 16.0) + 16.0;
            let x = Scale::new(x0, x1, left, left + side);
            let y = Scale::new(y0, y1, top + side, top);
            let _ = writeln!(
                c.out,
                r##"<rect x="{left:.1}" y="{top:.1}" width="{side:.1}" height="{side:.1}" fill="none" stroke="#999"/>"##
            );
            let _ = writeln!(
                c.out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                left + side / 2.0,
                top - 4.0,
                esc(&panel.title)
            );
            for (p, &l) in panel.points.iter().zip(&panel.labels) {
                let _ = writeln!(
                    c.out,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="1.2" fill="{}"/>"#,
                    x.at(p[0]),
                    y.at(p[1]),
                    color(l as usize)
                );
            }
        }
    }
    c.finish()
}
