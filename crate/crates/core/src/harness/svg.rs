//! Minimal SVG line chart of the two sequences against `1/n`.

use std::fmt::Write;

use crate::partition::PartitionPoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// `D_n` and `exp(n Gamma_0) L_n` against `1/n`, with a horizontal line at
/// `c` when it is known.
pub fn convergence_svg(points: &[PartitionPoint], c: Option<f64>) -> String {
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.n as f64).collect();
    let mut ys: Vec<f64> = points.iter().flat_map(|p| [p.d_n, p.scaled]).collect();
    ys.extend(c);
    let (x_lo, x_hi) = padded_range(0.0, xs.iter().copied().fold(0.0, f64::max));
    let (y_lo, y_hi) = padded_range(
        ys.iter().copied().fold(f64::INFINITY, f64::min),
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let series = [
        ("D_n", "#1f77b4", points.iter().map(|p| p.d_n).collect::<Vec<_>>()),
        ("exp(n Gamma_0) L_n", "#d62728", points.iter().map(|p| p.scaled).collect()),
    ];
    for (label, colour, values) in &series {
        let coords: Vec<String> = xs
            .iter()
            .zip(values)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-label="{label}" fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
    }
    if let Some(c) = c {
        let _ = writeln!(
            out,
            r##"<line class="reference" data-label="C" x1="{MARGIN}" x2="{:.2}" y1="{y:.2}" y2="{y:.2}" stroke="#2ca02c" stroke-dasharray="6 4"/>"##,
            WIDTH - MARGIN,
            y = sy(c)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">1/n</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="30" font-size="12">D_n (blue), exp(n Gamma_0) L_n (red), C (green, dashed)</text>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{y_hi:.6}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{y_lo:.6}</text>"#,
        MARGIN - 4.0,
        HEIGHT - MARGIN
    );
    out.push_str("</svg>\n");
    out
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        let pad = lo.abs().max(1.0) * 1e-3;
        return (lo - pad, hi + pad);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}
