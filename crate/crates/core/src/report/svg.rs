//! Minimal inline SVG charts.

use std::fmt::Write;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub struct Series {
    pub name: String,
    /// `(x, y, optional half-width of an error bar)`.
    pub points: Vec<(f64, f64, Option<f64>)>,
}

struct Scale {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, xs: Option<&Scale>, ys: &Scale) {
    let _ = write!(
        out,
        "<svg class=\"chart\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" role=\"img\">\
         <text x=\"{}\" y=\"18\" class=\"title\">{}</text>",
        LEFT,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = write!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#444\"/>\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#444\"/>"
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        if let Some(xs) = xs {
            let xv = xs.lo + t * (xs.hi - xs.lo);
            let _ = write!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" class=\"tick\">{}</text>",
                xs.map(xv),
                y0 + 14.0,
                fmt_tick(xv)
            );
        }
        let yv = ys.lo + t * (ys.hi - ys.lo);
        let py = ys.map(yv);
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" class=\"tick\">{}</text>\
             <line x1=\"{x0}\" y1=\"{py:.1}\" x2=\"{x1}\" y2=\"{py:.1}\" stroke=\"#eee\"/>",
            x0 - 4.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" class=\"label\">{}</text>\
         <text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" class=\"label\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 8.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        let x = WIDTH - RIGHT + 12.0;
        let _ = write!(
            out,
            "<rect x=\"{x}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/>\
             <text x=\"{}\" y=\"{:.1}\" class=\"tick\">{}</text>",
            y - 9.0,
            PALETTE[i % PALETTE.len()],
            x + 14.0,
            y,
            escape(name)
        );
    }
}

/// One polyline per series, with optional vertical error bars.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let Some((xlo, xhi)) = bounds(all().map(|p| p.0)) else {
        return String::new();
    };
    let (ylo, yhi) = bounds(all().flat_map(|p| {
        let e = p.2.unwrap_or(0.0);
        [p.1 - e, p.1 + e]
    }))
    .unwrap_or((0.0, 1.0));
    let xs = Scale::new(xlo, xhi, LEFT, WIDTH - RIGHT);
    let ys = Scale::new(ylo, yhi, HEIGHT - BOTTOM, TOP);
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, Some(&xs), &ys);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|p| format!("{:.1},{:.1}", xs.map(p.0), ys.map(p.1)))
            .collect();
        let _ = write!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
        for p in &s.points {
            if let Some(e) = p.2.filter(|e| *e > 0.0 && p.1.is_finite()) {
                let x = xs.map(p.0);
                let _ = write!(
                    out,
                    "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-opacity=\"0.5\"/>",
                    ys.map(p.1 - e),
                    ys.map(p.1 + e)
                );
            }
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    legend(&mut out, &names);
    out.push_str("</svg>");
    out
}

/// Vertical bars with optional error bars; `labels` and `values` align.
pub fn bar_chart(
    title: &str,
    y_label: &str,
    labels: &[String],
    values: &[f64],
    errors: Option<&[f64]>,
) -> String {
    if values.is_empty() {
        return String::new();
    }
    let err = |i: usize| errors.map_or(0.0, |e| e[i]);
    let (lo, hi) = bounds((0..values.len()).flat_map(|i| [values[i] - err(i), values[i] + err(i)]))
        .unwrap_or((0.0, 1.0));
    let ys = Scale::new(lo.min(0.0), hi.max(0.0), HEIGHT - BOTTOM, TOP);
    let n = values.len() as f64;
    let xs = Scale::new(0.0, n, LEFT, WIDTH - RIGHT);
    let mut out = String::new();
    frame(&mut out, title, "", y_label, None, &ys);
    let zero = ys.map(0.0);
    let slot = (WIDTH - RIGHT - LEFT) / n;
    for (i, &v) in values.iter().enumerate() {
        let x = xs.map(i as f64) + slot * 0.15;
        let w = slot * 0.7;
        let y = ys.map(v);
        let (top, h) = if y < zero { (y, zero - y) } else { (zero, y - zero) };
        let _ = write!(
            out,
            "<rect x=\"{x:.1}\" y=\"{top:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"{}\"/>",
            PALETTE[0]
        );
        let e = err(i);
        if e > 0.0 {
            let cx = x + w / 2.0;
            let _ = write!(
                out,
                "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"#222\"/>",
                ys.map(v - e),
                ys.map(v + e)
            );
        }
        if labels.len() <= 25 || i % 5 == 0 {
            let _ = write!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" class=\"tick small\">{}</text>",
                x + w / 2.0,
                HEIGHT - BOTTOM + 26.0,
                escape(&labels[i])
            );
        }
    }
    out.push_str("</svg>");
    out
}
