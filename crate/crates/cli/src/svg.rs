//! Standalone SVG plots. Output depends only on the input data, and every
//! coordinate is printed with fixed precision so reruns are byte-identical.

use std::fmt::Write;

use trendgate_core::metrics::Histogram;

use crate::csv_io::format_timestamp;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const MAX_POINTS: usize = 2000;

const PRICE_COLOR: &str = "#1f4e9c";
const EQUITY_COLOR: &str = "#c0392b";
const BAR_COLOR: &str = "#4a7f4a";

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn plot() -> Self {
        Self {
            x0: LEFT,
            x1: WIDTH - RIGHT,
            y0: HEIGHT - BOTTOM,
            y1: TOP,
        }
    }

    fn x(&self, t: f64, lo: f64, hi: f64) -> f64 {
        self.x0 + (self.x1 - self.x0) * scale(t, lo, hi)
    }

    fn y(&self, v: f64, lo: f64, hi: f64) -> f64 {
        self.y0 - (self.y0 - self.y1) * scale(v, lo, hi)
    }
}

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let valid = lo.is_finite() && hi.is_finite() && hi > lo;
    if !valid {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v.abs() >= 1000.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn close(out: &mut String) {
    out.push_str("</svg>\n");
}

fn y_axis(out: &mut String, f: &Frame, lo: f64, hi: f64, side: &str, name: &str, color: &str) {
    let (x, dir, anchor) = if side == "left" {
        (f.x0, -1.0, "end")
    } else {
        (f.x1, 1.0, "start")
    };
    let _ = writeln!(
        out,
        r#"<g class="axis y {side}" stroke="{color}" fill="{color}">"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
        f.y0, f.y1
    );
    for t in nice_ticks(lo, hi, 5) {
        let y = f.y(t, lo, hi);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" stroke="none" text-anchor="{anchor}">{}</text>"#,
            x + 5.0 * dir,
            x + 8.0 * dir,
            y + 4.0,
            label(t)
        );
    }
    let lx = x + 62.0 * dir;
    let ly = (f.y0 + f.y1) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{ly:.2}" stroke="none" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(name)
    );
    out.push_str("</g>\n");
}

fn x_axis(out: &mut String, f: &Frame, ticks: &[(f64, String)], name: &str) {
    out.push_str("<g class=\"axis x\" stroke=\"black\" fill=\"black\">\n");
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        f.x0, f.y0, f.x1, f.y0
    );
    for (x, text) in ticks {
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/><text x="{x:.2}" y="{:.2}" stroke="none" text-anchor="middle">{}</text>"#,
            f.y0,
            f.y0 + 5.0,
            f.y0 + 18.0,
            escape(text)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" stroke="none" text-anchor="middle">{}</text>"#,
        (f.x0 + f.x1) / 2.0,
        HEIGHT - 10.0,
        escape(name)
    );
    out.push_str("</g>\n");
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn sample_indices(n: usize) -> Vec<usize> {
    if n <= MAX_POINTS {
        return (0..n).collect();
    }
    let stride = n.div_ceil(MAX_POINTS);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

fn polyline(out: &mut String, class: &str, color: &str, points: &[(f64, f64)]) {
    let _ = write!(
        out,
        r#"<polyline class="series {class}" fill="none" stroke="{color}" stroke-width="1.2" points=""#
    );
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.2},{y:.2}");
    }
    out.push_str("\"/>\n");
}

/// Close price on the left axis and cumulative equity on the right axis,
/// sharing a time axis.
pub fn equity_overlay(title: &str, ts: &[i64], close_bp: &[i64], equity_bp: &[i64]) -> String {
    let n = ts.len().min(close_bp.len()).min(equity_bp.len());
    let f = Frame::plot();
    let idx = sample_indices(n);
    let (plo, phi) = bounds(idx.iter().map(|&i| close_bp[i] as f64));
    let (elo, ehi) = bounds(idx.iter().map(|&i| equity_bp[i] as f64));
    let span = (n.max(2) - 1) as f64;

    let mut out = String::new();
    open(&mut out, title);
    let price: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (f.x(i as f64, 0.0, span), f.y(close_bp[i] as f64, plo, phi)))
        .collect();
    let equity: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (f.x(i as f64, 0.0, span), f.y(equity_bp[i] as f64, elo, ehi)))
        .collect();
    polyline(&mut out, "price", PRICE_COLOR, &price);
    polyline(&mut out, "equity", EQUITY_COLOR, &equity);
    y_axis(&mut out, &f, plo, phi, "left", "close (bp)", PRICE_COLOR);
    y_axis(&mut out, &f, elo, ehi, "right", "equity (bp)", EQUITY_COLOR);
    let ticks: Vec<(f64, String)> = if n == 0 {
        Vec::new()
    } else {
        (0..5)
            .map(|k| {
                let i = ((n - 1) * k) / 4;
                (
                    f.x(i as f64, 0.0, span),
                    format_timestamp(ts[i])[..10].to_string(),
                )
            })
            .collect()
    };
    x_axis(&mut out, &f, &ticks, "time");
    close(&mut out);
    out
}

/// One bar per bin; bins are `(left_edge, right_edge, count)`.
pub fn histogram(title: &str, x_name: &str, bins: &[(f64, f64, u64)]) -> String {
    let f = Frame::plot();
    let (xlo, xhi) = if bins.is_empty() {
        (0.0, 1.0)
    } else {
        (bins[0].0, bins[bins.len() - 1].1)
    };
    let cmax = bins.iter().map(|b| b.2).max().unwrap_or(0).max(1) as f64;

    let mut out = String::new();
    open(&mut out, title);
    out.push_str(&format!(
        "<g class=\"series bars\" fill=\"{BAR_COLOR}\" stroke=\"white\">\n"
    ));
    for &(l, r, c) in bins {
        let x = f.x(l, xlo, xhi);
        let w = f.x(r, xlo, xhi) - x;
        let y = f.y(c as f64, 0.0, cmax);
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}"/>"#,
            f.y0 - y
        );
    }
    out.push_str("</g>\n");
    y_axis(&mut out, &f, 0.0, cmax, "left", "count", "black");
    let ticks: Vec<(f64, String)> = nice_ticks(xlo, xhi, 8)
        .into_iter()
        .map(|t| (f.x(t, xlo, xhi), label(t)))
        .collect();
    x_axis(&mut out, &f, &ticks, x_name);
    close(&mut out);
    out
}

pub fn histogram_bins(h: &Histogram) -> Vec<(f64, f64, u64)> {
    h.counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let l = (h.first_edge + k as i64 * h.bin_width) as f64;
            (l, l + h.bin_width as f64, c)
        })
        .collect()
}

/// Fixed-width bins aligned to multiples of `width`.
pub fn float_bins(values: &[f64], width: f64) -> Vec<(f64, f64, u64)> {
    let keys: Vec<i64> = values
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v / width).floor() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (keys.iter().min(), keys.iter().max()) else {
        return Vec::new();
    };
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for k in keys {
        counts[(k - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let l = (lo + i as i64) as f64 * width;
            (l, l + width, c)
        })
        .collect()
}
