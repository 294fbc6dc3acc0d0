//! Self-contained SVG charts. The plotted numbers are repeated in an XML
//! comment so the files diff cleanly and can be re-read without a plotter.

use std::fmt::Write as _;

use crate::surface::{Connectivity, DiscreteHypersurface};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "- -")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Line chart; with `log_y` non-positive values are dropped.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let tf = |y: f64| if log_y { y.log10() } else { y };
    let mut pts: Vec<Vec<(f64, f64)>> = Vec::new();
    for s in series {
        pts.push(
            s.xs.iter()
                .zip(&s.ys)
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || **y > 0.0))
                .map(|(x, y)| (*x, tf(*y)))
                .collect(),
        );
    }
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let ylab = if log_y { format!("1e{yv:.1}") } else { format!("{yv:.3e}") };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.4}</text>"#,
            px(xv),
            HEIGHT - MARGIN + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ylab}</text>"#,
            MARGIN - 4.0,
            py(yv) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&if log_y { format!("{y_label} (log10)") } else { y_label.to_string() })
    );
    for (i, (s, p)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * i as f64,
            escape(&s.label)
        );
    }
    out.push_str("<!-- data\n");
    for s in series {
        let _ = writeln!(out, "# {}", escape(&s.label));
        for (x, y) in s.xs.iter().zip(&s.ys) {
            let _ = writeln!(out, "{x},{y}");
        }
    }
    out.push_str("-->\n</svg>\n");
    out
}

/// Planar outline: the curve itself, or the `z = 0` cross-section of a mesh.
fn outline(s: &DiscreteHypersurface) -> Vec<[(f64, f64); 2]> {
    let p = s.positions();
    match s.connectivity() {
        Connectivity::Loop { len } => (0..*len)
            .map(|i| {
                let (a, b) = (p[i], p[(i + 1) % len]);
                [(a.x, a.y), (b.x, b.y)]
            })
            .collect(),
        Connectivity::Triangles(tris) => {
            let mut segs = Vec::new();
            for t in tris.iter() {
                let mut hits = Vec::new();
                for k in 0..3 {
                    let (a, b) = (p[t[k]], p[t[(k + 1) % 3]]);
                    if (a.z > 0.0) != (b.z > 0.0) {
                        let f = a.z / (a.z - b.z);
                        hits.push((a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)));
                    }
                }
                if hits.len() == 2 {
                    segs.push([hits[0], hits[1]]);
                }
            }
            segs
        }
    }
}

/// Outlines of several snapshots on shared axes.
pub fn silhouettes(title: &str, snapshots: &[(f64, &DiscreteHypersurface)]) -> String {
    let outlines: Vec<_> = snapshots.iter().map(|(_, s)| outline(s)).collect();
    let r = outlines
        .iter()
        .flatten()
        .flat_map(|seg| seg.iter())
        .map(|(x, y)| x.abs().max(y.abs()))
        .fold(0.0, f64::max)
        .max(1e-12);
    let scale = (HEIGHT - 2.0 * MARGIN) / (2.0 * r);
    let cx = WIDTH / 2.0;
    let cy = HEIGHT / 2.0 + 10.0;
    let mut out = String::new();
    header(&mut out, title);
    for (i, ((t, _), segs)) in snapshots.iter().zip(&outlines).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for [(ax, ay), (bx, by)] in segs {
            let _ = write!(
                d,
                "M{:.2},{:.2}L{:.2},{:.2}",
                cx + ax * scale,
                cy - ay * scale,
                cx + bx * scale,
                cy - by * scale
            );
        }
        let _ = writeln!(out, r#"<path fill="none" stroke="{color}" stroke-width="1.2" d="{d}"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="12" y="{:.1}" fill="{color}">t = {t:.5}</text>"#,
            MARGIN + 14.0 * i as f64
        );
    }
    out.push_str("<!-- data\n");
    for ((t, s), segs) in snapshots.iter().zip(&outlines) {
        let _ = writeln!(out, "# t = {t}, vertices = {}, segments = {}", s.vertex_count(), segs.len());
    }
    out.push_str("-->\n</svg>\n");
    out
}
