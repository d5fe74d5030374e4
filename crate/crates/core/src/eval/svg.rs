//! Minimal static SVG plots.

use std::fmt::Write;

use super::{ScoreHistogram, Sweep};

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (W - 2.0 * MARGIN) * (x / self.x_max)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (H - 2.0 * MARGIN) * (y / self.y_max)
    }
}

fn open(title: &str, x_label: &str, y_label: &str, frame: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let (x0, y0, x1, y1) = (frame.px(0.0), frame.py(0.0), frame.px(frame.x_max), frame.py(frame.y_max));
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" text-anchor="middle">0</text>"#, y0 + 15.0);
    let _ = writeln!(
        s,
        r#"<text x="{x1}" y="{}" text-anchor="middle">{}</text>"#,
        y0 + 15.0,
        frame.x_max
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{y1}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        frame.y_max
    );
    s
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, frame: &Frame, color: &str) -> String {
    let pts: Vec<String> = points
        .map(|(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    )
}

/// ROC curve: FAR on x, genuine acceptance rate on y, both in percent.
pub fn roc_svg(sweep: &Sweep) -> String {
    let frame = Frame {
        x_max: 100.0,
        y_max: 100.0,
    };
    let mut s = open("ROC", "FAR (%)", "100 - FRR (%)", &frame);
    s.push_str(&polyline(sweep.roc().into_iter(), &frame, "steelblue"));
    s.push_str("</svg>\n");
    s
}

/// Accuracy against decision threshold.
pub fn accuracy_svg(sweep: &Sweep) -> String {
    let frame = Frame {
        x_max: f64::from(sweep.points.last().map_or(1, |p| p.threshold)),
        y_max: 100.0,
    };
    let mut s = open("Accuracy vs threshold", "threshold (matches)", "ACC (%)", &frame);
    s.push_str(&polyline(
        sweep.accuracy_curve().into_iter().map(|(t, a)| (f64::from(t), a)),
        &frame,
        "darkgreen",
    ));
    s.push_str("</svg>\n");
    s
}

/// Genuine (blue) and impostor (red) score histograms, side by side per bin.
pub fn histogram_svg(hist: &ScoreHistogram) -> String {
    let peak = hist
        .genuine
        .iter()
        .chain(&hist.impostor)
        .copied()
        .max()
        .unwrap_or(1)
        .max(1);
    let frame = Frame {
        x_max: *hist.edges.last().unwrap_or(&1.0),
        y_max: peak as f64,
    };
    let mut s = open("Score distribution", "matches", "comparisons", &frame);
    for (b, (&g, &i)) in hist.genuine.iter().zip(&hist.impostor).enumerate() {
        let (lo, hi) = (hist.edges[b], hist.edges[b + 1]);
        let mid = 0.5 * (lo + hi);
        for (count, from, to, color) in [(g, lo, mid, "steelblue"), (i, mid, hi, "indianred")] {
            if count == 0 {
                continue;
            }
            let x = frame.px(from);
            let width = frame.px(to) - x;
            let y = frame.py(count as f64);
            let height = frame.py(0.0) - y;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{width:.2}" height="{height:.2}" fill="{color}"/>"#
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
