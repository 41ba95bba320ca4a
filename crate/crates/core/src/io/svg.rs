//! Minimal SVG figures: a heatmap with dashed overlays and line plots.

use std::fmt::Write;

use crate::spectra::SpectrumMap;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const MAX_DISPLAY_COLUMNS: usize = 320;

/// Colour stops from dark blue through teal to yellow.
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.00, [0x0d, 0x08, 0x87]),
    (0.25, [0x3b, 0x52, 0x8b]),
    (0.50, [0x21, 0x90, 0x8d]),
    (0.75, [0x5d, 0xc8, 0x63]),
    (1.00, [0xfd, 0xe7, 0x25]),
];

const LINE_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn colormap(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let k = STOPS.iter().position(|s| s.0 >= v).unwrap_or(STOPS.len() - 1).max(1);
    let (x0, c0) = STOPS[k - 1];
    let (x1, c1) = STOPS[k];
    let f = (v - x0) / (x1 - x0);
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2]))
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"18\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r) = (LEFT, WIDTH - RIGHT);
    let (t, b) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        "<rect x=\"{l:.1}\" y=\"{t:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        r - l,
        b - t
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = frame.x0 + f * (frame.x1 - frame.x0);
        let yv = frame.y0 + f * (frame.y1 - frame.y0);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            frame.px(xv),
            b + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            l - 4.0,
            frame.py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (l + r) / 2.0,
        HEIGHT - 10.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
    let mut d = String::new();
    let mut pen_down = false;
    for &(x, y) in pts {
        if !(x.is_finite() && y.is_finite()) {
            pen_down = false;
            continue;
        }
        let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, frame.px(x), frame.py(y));
        pen_down = true;
    }
    if d.is_empty() {
        return;
    }
    let dash = if dashed { " stroke-dasharray=\"6,4\"" } else { "" };
    let _ = writeln!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
        d.trim_end()
    );
}

/// Heatmap with kinetic energy on x and photon energy on y. Each overlay is
/// a dashed curve of (kinetic energy, photon energy) points.
pub fn heatmap(map: &SpectrumMap, title: &str, overlays: &[Vec<(f64, f64)>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (nr, nc) = (map.n_rows(), map.n_cols());
    if nr == 0 || nc < 2 {
        out.push_str("</svg>\n");
        return out;
    }
    let ke = &map.kinetic_energies;
    let hw = &map.photon_energies;
    let half_row = if nr > 1 { 0.5 * (hw[nr - 1] - hw[0]) / (nr - 1) as f64 } else { 0.05 };
    let frame = Frame {
        x0: ke[0],
        x1: ke[nc - 1],
        y0: hw[0] - half_row,
        y1: hw[nr - 1] + half_row,
    };
    let bins = nc.min(MAX_DISPLAY_COLUMNS);
    let vmax = map.max();
    let cell_h = (frame.py(frame.y0) - frame.py(frame.y1)) / nr as f64;
    let cell_w = (WIDTH - LEFT - RIGHT) / bins as f64;
    for (r, row) in map.rows().enumerate() {
        let y = frame.py(hw[r] + half_row);
        for b in 0..bins {
            let lo = b * nc / bins;
            let hi = ((b + 1) * nc / bins).max(lo + 1);
            let v = row[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            let c = colormap(if vmax > 0.0 { v / vmax } else { 0.0 });
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{c}\"/>",
                LEFT + b as f64 * cell_w,
                y,
                cell_w + 0.05,
                cell_h + 0.05
            );
        }
    }
    for o in overlays {
        polyline(&mut out, &frame, o, "white", true);
    }
    axes(&mut out, &frame, "kinetic energy (eV)", "photon energy (eV)");
    out.push_str("</svg>\n");
    out
}

/// One named series of (x, y) points.
pub struct Series<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series<'_>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.x.iter()).filter(finite);
    let ys = series.iter().flat_map(|s| s.y.iter()).filter(finite);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(x0 < x1) {
        x0 = if x0.is_finite() { x0 - 1.0 } else { 0.0 };
        x1 = x0 + 2.0;
    }
    if !(y0 < y1) {
        y0 = if y0.is_finite() { y0 - 1.0 } else { 0.0 };
        y1 = y0 + 2.0;
    }
    let pad = 0.05 * (y1 - y0);
    let frame = Frame { x0, x1, y0: y0 - pad, y1: y1 + pad };
    for (k, s) in series.iter().enumerate() {
        let color = LINE_COLORS[k % LINE_COLORS.len()];
        let pts: Vec<(f64, f64)> = s.x.iter().copied().zip(s.y.iter().copied()).collect();
        polyline(&mut out, &frame, &pts, color, false);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>",
            LEFT + 10.0,
            TOP + 16.0 * (k as f64 + 1.0),
            escape(s.name)
        );
    }
    axes(&mut out, &frame, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}
