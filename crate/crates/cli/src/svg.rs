//! Static SVG line plots: framed axes with ticks, one data polyline and an
//! optional fit overlay.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Model curve drawn over the data, `(x, y)`.
    pub overlay: Option<(Vec<f64>, Vec<f64>)>,
}

fn range<'a>(vals: impl Iterator<Item = &'a f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        if !v.is_finite() {
            return None;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo < hi).then_some((lo, hi))
}

/// Tick positions at 1, 2 or 5 × 10ⁿ spacing, with the decimals needed to
/// print them.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

fn polyline(out: &mut String, xs: &[f64], ys: &[f64], map: &dyn Fn(f64, f64) -> (f64, f64), style: &str) {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let (px, py) = map(x, y);
            format!("{},{}", num(px), num(py))
        })
        .collect();
    writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, pts.join(" ")).unwrap();
}

/// Renders `plot`; fails on fewer than two points, non-finite values or a
/// zero-width axis.
pub fn render(plot: &Plot) -> Result<String, String> {
    if plot.x.len() != plot.y.len() || plot.x.len() < 2 {
        return Err(format!("plot needs at least two (x, y) points, got {} and {}", plot.x.len(), plot.y.len()));
    }
    let mut all_x: Vec<&f64> = plot.x.iter().collect();
    let mut all_y: Vec<&f64> = plot.y.iter().collect();
    if let Some((ox, oy)) = &plot.overlay {
        if ox.len() != oy.len() || ox.len() < 2 {
            return Err("overlay needs at least two matching points".into());
        }
        all_x.extend(ox);
        all_y.extend(oy);
    }
    let (x0, x1) = range(all_x.into_iter()).ok_or("degenerate or non-finite x range")?;
    let (y0, y1) = range(all_y.into_iter()).ok_or("degenerate or non-finite y range")?;
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let map = move |x: f64, y: f64| (LEFT + (x - x0) / (x1 - x0) * pw, TOP + (y1 - y) / (y1 - y0) * ph);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(&plot.title)).unwrap();
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();

    let (xt, xd) = ticks(x0, x1);
    for t in xt {
        let (px, _) = map(t, y0);
        let py = TOP + ph;
        writeln!(s, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>"#, num(px), num(py), num(py + 5.0)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{:.*}</text>"#, num(px), num(py + 18.0), xd, t).unwrap();
    }
    let (yt, yd) = ticks(y0, y1);
    for t in yt {
        let (_, py) = map(x0, t);
        writeln!(s, r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>"#, num(LEFT - 5.0), num(py), num(LEFT)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.*}</text>"#, num(LEFT - 8.0), num(py + 4.0), yd, t).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, escape(&plot.x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    )
    .unwrap();

    polyline(&mut s, &plot.x, &plot.y, &map, r##"stroke="#1f4e9c" stroke-width="1.2""##);
    if let Some((ox, oy)) = &plot.overlay {
        polyline(&mut s, ox, oy, &map, r##"stroke="#c0392b" stroke-width="1.5" stroke-dasharray="6 3""##);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(x: Vec<f64>, y: Vec<f64>) -> Plot {
        Plot { title: "t".into(), x_label: "Frequency (GHz)".into(), y_label: "I".into(), x, y, overlay: None }
    }

    #[test]
    fn two_points_one_segment() {
        let svg = render(&plot(vec![0.0, 1.0], vec![0.0, 2.0])).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains("Frequency (GHz)"));
    }

    #[test]
    fn overlay_adds_second_polyline() {
        let mut p = plot(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 1.0]);
        p.overlay = Some((vec![0.0, 1.0, 2.0], vec![1.1, 2.9, 1.1]));
        assert_eq!(render(&p).unwrap().matches("<polyline").count(), 2);
    }

    #[test]
    fn degenerate_ranges_rejected() {
        assert!(render(&plot(vec![1.0, 1.0], vec![0.0, 1.0])).is_err());
        assert!(render(&plot(vec![0.0, 1.0], vec![2.0, 2.0])).is_err());
        assert!(render(&plot(vec![0.0], vec![2.0])).is_err());
        assert!(render(&plot(vec![0.0, f64::NAN], vec![0.0, 1.0])).is_err());
    }

    #[test]
    fn deterministic_and_escaped() {
        let mut p = plot(vec![406_000.0, 406_500.0, 407_000.0], vec![0.0, 1e-3, 0.0]);
        p.title = "a < b & c".into();
        let a = render(&p).unwrap();
        assert_eq!(a, render(&p).unwrap());
        assert!(a.contains("a &lt; b &amp; c"));
    }

    #[test]
    fn tick_steps() {
        let (t, d) = ticks(0.0, 1.0);
        assert_eq!(d, 1);
        assert_eq!(t.len(), 6);
        let (t, d) = ticks(-250.0, 400.0);
        assert_eq!(d, 0);
        assert!(t.contains(&0.0) && t.iter().all(|v| v % 100.0 == 0.0));
    }
}
