//! Minimal SVG line plots with linear or logarithmic y axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub scale: Scale,
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".to_string()
    } else if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Widens a degenerate range so that it can be mapped onto an axis.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - d, hi + d)
    }
}

/// Renders the points as a polyline. Points with non-finite coordinates,
/// and with y ≤ 0 on a log axis, are dropped; with nothing left the frame is
/// drawn with a "no data" note.
pub fn line_plot(spec: &PlotSpec, points: &[(f64, f64)]) -> String {
    let log = spec.scale == Scale::Log;
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log || *y > 0.0))
        .map(|&(x, y)| (x, if log { y.log10() } else { y }))
        .collect();
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(spec.title)
    );
    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(spec.x_label)
    );
    let y_title = if log { format!("{} (log scale)", spec.y_label) } else { spec.y_label.to_string() };
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&y_title)
    );
    if pts.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="gray">no data</text>"#,
            LEFT + pw / 2.0,
            TOP + ph / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        pts.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = padded(fold(|p| p.0).0, fold(|p| p.0).1);
    let (y0, y1) = {
        let (lo, hi) = fold(|p| p.1);
        if log {
            padded(lo.floor(), hi.ceil())
        } else {
            padded(lo, hi)
        }
    };
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    for i in 0..=TICKS {
        let x = x0 + (x1 - x0) * i as f64 / TICKS as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(x),
            TOP + ph,
            sx(x),
            TOP + ph + 5.0,
            sx(x),
            TOP + ph + 19.0,
            tick_label(x)
        );
    }
    let y_ticks: Vec<f64> = if log {
        let (a, b) = (y0.ceil() as i64, y1.floor() as i64);
        let step = ((b - a) as usize).div_ceil(TICKS).max(1) as i64;
        (a..=b).step_by(step as usize).map(|e| e as f64).collect()
    } else {
        (0..=TICKS).map(|i| y0 + (y1 - y0) * i as f64 / TICKS as f64).collect()
    };
    for y in y_ticks {
        let label = if log { format!("1e{}", y as i64) } else { tick_label(y) };
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT,
            sy(y),
            LEFT + pw,
            sy(y),
            LEFT - 6.0,
            sy(y) + 4.0,
            label
        );
    }
    let mut path = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, sx(x), sy(y));
    }
    let _ = writeln!(svg, r##"<polyline fill="none" stroke="#1f5fbf" stroke-width="1.5" points="{path}"/>"##);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(scale: Scale) -> PlotSpec<'static> {
        PlotSpec { title: "E <t>", x_label: "t", y_label: "E", scale }
    }

    #[test]
    fn empty_input_gives_frame_with_note() {
        let svg = line_plot(&spec(Scale::Linear), &[]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("no data"));
        assert!(!svg.contains("polyline"));
        assert!(svg.contains("E &lt;t&gt;"));
    }

    #[test]
    fn polyline_spans_the_plot_area() {
        let pts: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, (i * i) as f64)).collect();
        let svg = line_plot(&spec(Scale::Linear), &pts);
        assert!(svg.contains(r#"points="80.00,350.00 "#), "{svg}");
        assert!(svg.contains(" 620.00,40.00\""));
        assert_eq!(svg, line_plot(&spec(Scale::Linear), &pts));
    }

    #[test]
    fn log_axis_drops_nonpositive_values() {
        let pts = [(0.0, 0.0), (1.0, 1e-3), (2.0, 1e2)];
        let svg = line_plot(&spec(Scale::Log), &pts);
        assert!(svg.contains("1e-3") && svg.contains("1e2"));
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), 2);
        let constant = line_plot(&spec(Scale::Linear), &[(0.0, 2.0), (1.0, 2.0)]);
        assert!(constant.contains("polyline"));
    }
}
