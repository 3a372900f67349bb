//! Stiffness matrix as CSV and as an SVG heatmap.

use std::fmt::Write as _;

use clothfit_core::sim::{BendMatrix, BEND_ANGLES_DEG};

/// Rows are bend angles, columns measurement points, no header.
pub fn stiffness_csv(m: &BendMatrix) -> String {
    let mut out = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

const CELL: f64 = 72.0;
const LEFT: f64 = 110.0;
const TOP: f64 = 50.0;

/// Linear ramp from dark blue (low) to yellow (high).
fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(68.0, 253.0), lerp(1.0, 231.0), lerp(84.0, 37.0))
}

/// Heatmap with row index on the vertical axis and column index on the
/// horizontal one.
pub fn stiffness_svg(m: &BendMatrix, title: &str) -> String {
    let values = m.iter().flatten();
    let lo = values.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = values.copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let (rows, cols) = (m.len(), m[0].len());
    let width = LEFT + cols as f64 * CELL + 20.0;
    let height = TOP + rows as f64 * CELL + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    for (r, row) in m.iter().enumerate() {
        let y = TOP + r as f64 * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{r} ({}°)</text>"#,
            LEFT - 8.0,
            y + CELL / 2.0 + 4.0,
            BEND_ANGLES_DEG[r]
        );
        for (c, v) in row.iter().enumerate() {
            let x = LEFT + c as f64 * CELL;
            let t = if span > 0.0 { (v - lo) / span } else { 0.5 };
            let ink = if t > 0.6 { "black" } else { "white" };
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="white"/>"#,
                colour(t)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v:.3e}</text>"#,
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0
            );
        }
    }
    let base = TOP + rows as f64 * CELL;
    for c in 0..cols {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{c}</text>"#,
            LEFT + c as f64 * CELL + CELL / 2.0,
            base + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">measurement point (column index)</text>"#,
        LEFT + cols as f64 * CELL / 2.0,
        base + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">bend angle (row index)</text>"#,
        TOP + rows as f64 * CELL / 2.0,
        TOP + rows as f64 * CELL / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
