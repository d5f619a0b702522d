//! Minimal static SVG rendering for heatmaps and bar charts.

use std::fmt::Write;

use gaborstab::tfcore::RealField2D;

const CELL: f64 = 2.0;

/// Blue-to-yellow ramp on `t` in `[0, 1]`.
fn colour(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let stops = [(0.0, (68, 1, 84)), (0.5, (33, 145, 140)), (1.0, (253, 231, 37))];
    let (lo, hi) = if t < 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let s = (t - lo.0) / (hi.0 - lo.0);
    let mix = |a: u8, b: u8| (a as f64 + s * (b as f64 - a as f64)).round() as u8;
    (mix(lo.1 .0, hi.1 .0), mix(lo.1 .1, hi.1 .1), mix(lo.1 .2, hi.1 .2))
}

/// Heatmap of `ln(1 + value / max)`, time to the right and frequency upwards.
pub fn heatmap(field: &RealField2D, title: &str) -> String {
    let g = field.grid;
    let max = field.max();
    let (w, h) = (g.nx as f64 * CELL, g.nxi as f64 * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{}\" viewBox=\"0 0 {w} {}\">",
        h + 20.0,
        h + 20.0
    );
    let _ = writeln!(s, "<text x=\"2\" y=\"14\" font-size=\"12\">{title}</text>");
    for i in 0..g.nx {
        for j in 0..g.nxi {
            let t = if max > 0.0 { (field.at(i, j) / max).ln_1p() / std::f64::consts::LN_2 } else { 0.0 };
            let (r, gg, b) = colour(t);
            let y = 20.0 + (g.nxi - 1 - j) as f64 * CELL;
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"#{r:02x}{gg:02x}{b:02x}\"/>",
                i as f64 * CELL
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars on a log10 axis; nonpositive values are drawn empty.
pub fn log_bars(labels: &[String], values: &[f64], title: &str) -> String {
    let positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0 && v.is_finite()).collect();
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min).log10().floor();
    let hi = positive.iter().copied().fold(0.0, f64::max).log10().ceil().max(lo + 1.0);
    let (left, width, row) = (260.0, 400.0, 18.0);
    let height = 30.0 + row * labels.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{height}\">",
        left + width + 20.0
    );
    let _ = writeln!(s, "<text x=\"2\" y=\"14\" font-size=\"12\">{title} (log10 axis {lo} .. {hi})</text>");
    for (k, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = 24.0 + k as f64 * row;
        let len = if v > 0.0 && v.is_finite() && lo.is_finite() { (v.log10() - lo) / (hi - lo) * width } else { 0.0 };
        let _ = writeln!(s, "<text x=\"2\" y=\"{}\" font-size=\"11\">{label}</text>", y + 12.0);
        let _ = writeln!(
            s,
            "<rect x=\"{left}\" y=\"{y}\" width=\"{:.2}\" height=\"{}\" fill=\"#21918c\"/>",
            len.max(0.0),
            row - 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
