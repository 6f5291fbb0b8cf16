//! Minimal SVG line plots (no styling contract; CSV is the canonical
//! output).

use std::io::Write;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Writes a labeled line plot of one or more `(name, xs, ys)` series.
pub fn line_plot_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<f64>, Vec<f64>)],
) -> std::io::Result<()> {
    let mut xs_min = f64::INFINITY;
    let mut xs_max = f64::NEG_INFINITY;
    let mut ys_min = f64::INFINITY;
    let mut ys_max = f64::NEG_INFINITY;
    for (_, xs, ys) in series {
        for &x in xs {
            xs_min = xs_min.min(x);
            xs_max = xs_max.max(x);
        }
        for &y in ys {
            ys_min = ys_min.min(y);
            ys_max = ys_max.max(y);
        }
    }
    if !(xs_min.is_finite() && ys_min.is_finite()) || xs_min == xs_max {
        xs_min = 0.0;
        xs_max = 1.0;
    }
    if ys_min == ys_max {
        ys_min -= 0.5;
        ys_max += 0.5;
    }
    let pad = 0.04 * (ys_max - ys_min);
    ys_min -= pad;
    ys_max += pad;

    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = MARGIN + (x - xs_min) / (xs_max - xs_min) * (WIDTH - 2.0 * MARGIN);
        let py = HEIGHT - MARGIN - (y - ys_min) / (ys_max - ys_min) * (HEIGHT - 2.0 * MARGIN);
        (px, py)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 14.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        xml_escape(y_label)
    ));
    // bound labels
    svg.push_str(&format!(
        "<text x=\"{x0}\" y=\"{}\" font-size=\"10\">{:.4}</text>\n",
        HEIGHT - MARGIN + 16.0,
        xs_min
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\">{:.4}</text>\n",
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        xs_max
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{y0}\" text-anchor=\"end\" font-size=\"10\">{:.4}</text>\n",
        MARGIN - 6.0,
        ys_min + pad
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\">{:.4}</text>\n",
        MARGIN - 6.0,
        MARGIN + 4.0,
        ys_max - pad
    ));

    for (s, (name, xs, ys)) in series.iter().enumerate() {
        let color = COLORS[s % COLORS.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let (px, py) = to_px(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN - 140.0,
            MARGIN + 16.0 * (s as f64 + 1.0),
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");

    let mut file = std::fs::File::create(path)?;
    file.write_all(svg.as_bytes())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
