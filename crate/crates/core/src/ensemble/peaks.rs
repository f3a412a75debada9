//! Peak extraction and windowed areas.

use serde::{Deserialize, Serialize};

use super::spectrum::Spectrum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// GHz, parabola-refined.
    pub position: f64,
    pub height: f64,
    /// Absolute prominence (height above the higher of the two bases).
    pub prominence: f64,
    /// Full width at half height, GHz; `None` if a half-height crossing
    /// lies outside the data.
    pub fwhm_estimate: Option<f64>,
}

/// Local maxima whose prominence exceeds `min_prominence` (absolute
/// intensity units), sorted by position.
///
/// Plateaus count once, at their middle sample. The endpoints of the data
/// are never peaks.
pub fn find_peaks(s: &Spectrum, min_prominence: f64) -> Result<Vec<Peak>> {
    if !(min_prominence >= 0.0) {
        return Err(Error::domain("min_prominence must be >= 0", min_prominence));
    }
    let x = s.frequencies();
    let y = s.intensities();
    let n = y.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let mut peaks = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let k = (i + j) / 2;
                let prom = prominence(y, k);
                if prom > min_prominence {
                    peaks.push(refine(x, y, k, prom));
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(peaks)
}

fn prominence(y: &[f64], k: usize) -> f64 {
    let h = y[k];
    let mut left_min = h;
    for &v in y[..k].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &y[k + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn refine(x: &[f64], y: &[f64], k: usize, prominence: f64) -> Peak {
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    // Vertex of the parabola through the three samples (non-uniform safe).
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    let (position, height) = if curv < 0.0 {
        let xv = 0.5 * (x0 + x1) - 0.5 * d01 / curv;
        let xv = xv.clamp(x0, x2);
        let b = d01 - curv * (x0 + x1);
        let a = y0 - x0 * (b + curv * x0);
        (xv, a + xv * (b + curv * xv))
    } else {
        (x1, y1)
    };
    let half = 0.5 * height;
    let left = (0..k).rev().find(|&i| y[i] <= half).map(|i| interp(x, y, i, half));
    let right = (k + 1..y.len()).find(|&i| y[i] <= half).map(|i| interp(x, y, i - 1, half));
    let fwhm_estimate = match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    };
    Peak { position, height, prominence, fwhm_estimate }
}

// Crossing of level `h` between samples i and i+1.
fn interp(x: &[f64], y: &[f64], i: usize, h: f64) -> f64 {
    let (ya, yb) = (y[i], y[i + 1]);
    if ya == yb {
        return x[i];
    }
    x[i] + (h - ya) / (yb - ya) * (x[i + 1] - x[i])
}

/// Trapezoidal integral of the spectrum over `[lo, hi]`, with linear
/// interpolation at window edges that fall between samples.
pub fn integrated_area(s: &Spectrum, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let x = s.frequencies();
    let y = s.intensities();
    if x.len() < 2 {
        return Err(Error::Input("integration needs at least two samples".into()));
    }
    if !(hi > lo) {
        return Err(Error::domain("window upper edge must exceed lower edge", hi));
    }
    if lo < x[0] || hi > x[x.len() - 1] {
        return Err(Error::Domain {
            what: "window must lie inside the frequency grid",
            value: if lo < x[0] { lo } else { hi },
        });
    }
    let value_at = |f: f64| s.value_at(f).expect("edge inside grid");
    let first = x.partition_point(|&v| v <= lo);
    let last = x.partition_point(|&v| v < hi);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(last.saturating_sub(first) + 2);
    pts.push((lo, value_at(lo)));
    pts.extend((first..last).map(|i| (x[i], y[i])));
    pts.push((hi, value_at(hi)));
    Ok(pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum())
}

/// Window area minus the straight baseline joining the window-edge values;
/// removes smooth wings of neighboring lines.
pub fn baseline_corrected_area(s: &Spectrum, window: (f64, f64)) -> Result<f64> {
    let raw = integrated_area(s, window)?;
    let (lo, hi) = window;
    Ok(raw - 0.5 * (s.value_at(lo)? + s.value_at(hi)?) * (hi - lo))
}

/// Whether the samples strictly between `lo` and `hi` contain a local
/// minimum, i.e. a point lower (by a relative `1e-9`) than some sample on
/// each side of it. Two lines centered at `lo` and `hi` are resolved exactly
/// when this holds.
pub fn has_local_minimum(s: &Spectrum, lo: f64, hi: f64) -> bool {
    let x = s.frequencies();
    let y = s.intensities();
    let a = x.partition_point(|&v| v < lo);
    let b = x.partition_point(|&v| v <= hi);
    if b <= a + 2 {
        return false;
    }
    let w = &y[a..b];
    let mut left_max = Vec::with_capacity(w.len());
    let mut m = f64::NEG_INFINITY;
    for &v in w {
        m = m.max(v);
        left_max.push(m);
    }
    let mut right_max = f64::NEG_INFINITY;
    for j in (1..w.len() - 1).rev() {
        right_max = right_max.max(w[j + 1]);
        let floor = left_max[j - 1].min(right_max);
        if w[j] < floor * (1.0 - 1e-9) {
            return true;
        }
    }
    false
}
