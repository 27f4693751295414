//! Minimal SVG writer for log–log lifespan plots.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 60.0;

/// A polyline y = f(x) drawn across the data range.
pub struct Curve<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub f: &'a dyn Fn(f64) -> f64,
}

/// Log–log scatter of `points` with optional curves. Non-positive values are
/// skipped.
pub fn loglog_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], curves: &[Curve<'_>]) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = bounds(&pts);
    let samples: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            (0..=64)
                .filter_map(|i| {
                    let lx = x0 + (x1 - x0) * i as f64 / 64.0;
                    let y = (c.f)(10f64.powf(lx));
                    (y > 0.0 && y.is_finite()).then(|| (lx, y.log10()))
                })
                .collect()
        })
        .collect();
    for s in samples.iter().flatten() {
        y0 = y0.min(s.1);
        y1 = y1.max(s.1);
    }
    let (xp, yp) = (0.05 * (x1 - x0).max(1e-3), 0.05 * (y1 - y0).max(1e-3));
    x0 -= xp;
    x1 += xp;
    y0 -= yp;
    y1 += yp;
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{PAD},{} H{} M{PAD},{} V{PAD}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for k in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = sx(k as f64);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - PAD, H - PAD + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{k}</text>"#, H - PAD + 18.0);
    }
    for k in (y0.ceil() as i64)..=(y1.floor() as i64) {
        let y = sy(k as f64);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{PAD}" y2="{y:.2}" stroke="black"/>"#, PAD - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{k}</text>"#, PAD - 8.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, (c, s)) in curves.iter().zip(&samples).enumerate() {
        if s.len() >= 2 {
            let d: Vec<String> = s.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            let dash = if c.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(out, r#"<polyline points="{}" stroke="{}" fill="none"{dash}/>"#, d.join(" "), c.color);
        }
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#, W - PAD - 150.0, c.color, escape(c.label));
    }
    for (x, y) in &pts {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, sx(*x), sy(*y));
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(pts: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    if pts.is_empty() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let fold = |k: fn(&(f64, f64)) -> f64| {
        pts.iter()
            .map(k)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let (x0, x1) = fold(|p| p.0);
    let (y0, y1) = fold(|p| p.1);
    (x0, x1, y0, y1)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_contains_points_and_curves() {
        let pts = [(0.05, 80.0), (0.1, 40.0), (0.2, 20.0), (-1.0, 3.0)];
        let line = |x: f64| 4.0 / x;
        let svg = loglog_plot(
            "T vs ε",
            "epsilon",
            "T",
            &pts,
            &[Curve {
                label: "fit <slope -1>",
                color: "red",
                dashed: false,
                f: &line,
            }],
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("fit &lt;slope -1&gt;"));
    }

    #[test]
    fn empty_plot_is_well_formed() {
        let svg = loglog_plot("empty", "x", "y", &[], &[]);
        assert!(svg.contains("</svg>") && !svg.contains("NaN"));
    }
}
