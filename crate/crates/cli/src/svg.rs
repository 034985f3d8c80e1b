//! Self-contained SVG charts for capacity sweeps.
//!
//! Hand-rolled on purpose: one polyline per interference factor, labeled
//! axes, a legend, and nothing that reaches outside the file — no fonts,
//! scripts, or stylesheets to fetch, so the chart renders anywhere and
//! diffs cleanly between runs.

use smmimo_core::capacity::CapacityPoint;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 630.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 440.0;

/// Line colors, reused cyclically past the eighth curve.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Render the sweep as an SVG line chart, one curve per interference factor.
/// Points must arrive factor-major with SNR ascending inside each factor —
/// the order the sweep emits.
pub fn capacity_chart(points: &[CapacityPoint]) -> String {
    // Group consecutive runs of the same factor into curves.
    let mut curves: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for p in points {
        match curves.last_mut() {
            Some((alpha, curve)) if *alpha == p.alpha => {
                curve.push((p.snr_db, p.capacity_bps_hz));
            }
            _ => curves.push((p.alpha, vec![(p.snr_db, p.capacity_bps_hz)])),
        }
    }

    let xs: Vec<f64> = curves
        .first()
        .map(|(_, c)| c.iter().map(|&(x, _)| x).collect())
        .unwrap_or_default();
    let xmin = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let ytop = points
        .iter()
        .map(|p| p.capacity_bps_hz)
        .fold(0.0_f64, f64::max);
    let ymax = if ytop > 0.0 { ytop * 1.05 } else { 1.0 };

    let x = |v: f64| LEFT + (v - xmin) / xspan * (RIGHT - LEFT);
    let y = |v: f64| BOTTOM - v / ymax * (BOTTOM - TOP);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Axes.
    out.push_str(&format!(
        "  <line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "  <line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));

    // One x tick per grid SNR, one y tick per fifth of the range.
    for &v in &xs {
        let px = x(v);
        out.push_str(&format!(
            "  <line x1=\"{px:.2}\" y1=\"{BOTTOM}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            BOTTOM + 5.0
        ));
        out.push_str(&format!(
            "  <text x=\"{px:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{v}</text>\n",
            BOTTOM + 20.0
        ));
    }
    for i in 0..=5 {
        let v = ymax * (i as f64) / 5.0;
        let py = y(v);
        let label = if ymax >= 10.0 {
            format!("{v:.0}")
        } else {
            format!("{v:.2}")
        };
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{py:.2}\" x2=\"{LEFT}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            LEFT - 5.0
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{label}</text>\n",
            LEFT - 9.0,
            py + 4.0
        ));
    }
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">SNR (dB)</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 45.0
    ));
    out.push_str(&format!(
        "  <text x=\"20\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">capacity (bps/Hz)</text>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    ));

    // Curves and legend.
    for (i, (alpha, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = curve
            .iter()
            .map(|&(vx, vy)| format!("{:.2},{:.2}", x(vx), y(vy)))
            .collect();
        out.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        let ly = TOP + 16.0 + 20.0 * i as f64;
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{ly:.2}\" x2=\"{}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            RIGHT + 14.0,
            RIGHT + 44.0
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">alpha = \
             {alpha}</text>\n",
            RIGHT + 50.0,
            ly + 4.0
        ));
    }

    out.push_str("</svg>\n");
    out
}
