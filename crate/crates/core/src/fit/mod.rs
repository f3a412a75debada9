//! Nonlinear least squares and the spectroscopic model fits built on it.

mod lm;
mod models;

pub use lm::{least_squares, FitResult, LmOptions, ParamSpec, ParamValue, Problem, CONVERGED_GRADIENT_LIMIT};
pub use models::{FitOptions, ModelKind, ModelSpec};

use crate::ensemble::Spectrum;
use crate::error::{Error, Result};
use crate::physics::{PhysicalConstants, PHONON_PEAK_X};
use models::apply_overrides;

/// Fits `spec` to the points (x, y), honoring exclusions, weights,
/// initial values, fixes and bounds from `opts`.
pub fn fit_model(spec: &ModelSpec, x: &[f64], y: &[f64], opts: &FitOptions) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::Input(format!("{} x values but {} y values", x.len(), y.len())));
    }
    if let Some(&bad) = opts.exclude.iter().find(|&&i| i >= x.len()) {
        return Err(Error::Input(format!("exclusion index {bad} out of range for {} points", x.len())));
    }
    if let Some(s) = &opts.sigma {
        if s.len() != x.len() {
            return Err(Error::Input(format!("{} sigma values for {} points", s.len(), x.len())));
        }
    }
    let keep: Vec<usize> = (0..x.len()).filter(|i| !opts.exclude.contains(i)).collect();
    let xs: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    let sig: Option<Vec<f64>> = opts.sigma.as_ref().map(|s| keep.iter().map(|&i| s[i]).collect());
    if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
        return Err(Error::Input("data contain NaN or infinite values".into()));
    }
    let mut params = spec.kind.template(&xs, &ys)?;
    apply_overrides(&mut params, spec, &opts.init)?;
    let model = spec.kind.evaluator();
    let pb = Problem {
        model_name: spec.kind.name(),
        params,
        x: &xs,
        y: &ys,
        sigma: sig.as_deref(),
        model: model.as_ref(),
        options: opts.lm,
    };
    let mut res = least_squares(&pb)?;
    let mut excluded = opts.exclude.clone();
    excluded.sort_unstable();
    excluded.dedup();
    res.excluded = excluded;
    Ok(res)
}

fn split(points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    points.iter().copied().unzip()
}

fn olivero(fl: f64, fg: f64) -> f64 {
    0.5346 * fl + (0.2166 * fl * fl + fg * fg).sqrt()
}

/// Single Voigt peak plus constant offset. Derived: `voigt_fwhm`.
pub fn fit_voigt(s: &Spectrum, opts: &FitOptions) -> Result<FitResult> {
    let mut r = fit_model(&opts.spec(ModelKind::Voigt), s.frequencies(), s.intensities(), opts)?;
    r.derive("voigt_fwhm", "GHz", |p| olivero(p[1], p[2]));
    Ok(r)
}

/// `n` Voigt peaks on a common offset; components are numbered by
/// ascending starting center. Derived: `voigt_fwhm_k`.
pub fn fit_multi_voigt(s: &Spectrum, n: usize, opts: &FitOptions) -> Result<FitResult> {
    let mut r = fit_model(&opts.spec(ModelKind::MultiVoigt { n }), s.frequencies(), s.intensities(), opts)?;
    for k in 0..n {
        r.derive(&format!("voigt_fwhm_{}", k + 1), "GHz", |p| olivero(p[4 * k + 1], p[4 * k + 2]));
    }
    Ok(r)
}

/// Broad Lorentzian minus a hole Lorentzian plus offset, hole depth ≥ 0.
/// Derived: `hole_fwhm` and `hole_fwhm_half`. When the depth settles on
/// zero the hole shape is refit as fixed and the result flagged `no_hole`.
pub fn fit_bilorentzian(s: &Spectrum, opts: &FitOptions) -> Result<FitResult> {
    let spec = opts.spec(ModelKind::BiLorentzian);
    let mut r = fit_model(&spec, s.frequencies(), s.intensities(), opts)?;
    let depth = r.value("hole_depth");
    let broad = r.value("broad_amplitude").abs();
    if depth <= 1e-9 * broad && !opts.fixed.contains_key("hole_depth") {
        let mut o = opts.clone();
        o.fixed.insert("hole_depth".into(), 0.0);
        for name in ["hole_center", "hole_fwhm"] {
            o.fixed.insert(name.into(), r.value(name));
            o.bounds.remove(name);
        }
        o.bounds.remove("hole_depth");
        for name in ["broad_center", "broad_fwhm", "broad_amplitude", "offset"] {
            o.init.insert(name.into(), r.value(name));
        }
        o.init.remove("hole_depth");
        o.init.remove("hole_center");
        o.init.remove("hole_fwhm");
        r = fit_model(&o.spec(ModelKind::BiLorentzian), s.frequencies(), s.intensities(), &o)?;
        for name in ["hole_center", "hole_fwhm", "hole_depth"] {
            if let Some(p) = r.params.get_mut(name) {
                p.sigma = None;
            }
        }
        r.add_flag("no_hole");
    }
    r.derive("hole_fwhm", "GHz", |p| p[4]);
    r.derive("hole_fwhm_half", "GHz", |p| 0.5 * p[4]);
    Ok(r)
}

/// Zero-power extrapolation Γ(P) = gamma0·√(1 + P/p_sat) of (power, FWHM)
/// pairs. Falls back to gamma0 + slope·P (`linear_fallback`) when the
/// square-root law does not resolve a saturation power. Derived:
/// `gamma0_half` (the homogeneous width if the FWHM are hole widths).
pub fn extrapolate_zero_power(series: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    if series.len() < 3 {
        return Err(Error::Input(format!("{} points; at least 3 required", series.len())));
    }
    if let Some((p, w)) = series.iter().find(|(p, w)| !(*p > 0.0) || !(*w > 0.0)) {
        return Err(Error::Input(format!("powers and widths must be positive (got {p}, {w})")));
    }
    let (x, y) = split(series);
    let pmax = x.iter().cloned().fold(0.0, f64::max);
    let sqrt_fit = fit_model(&opts.spec(ModelKind::PowerBroadening), &x, &y, opts);
    let mut r = match sqrt_fit {
        Ok(r) if r.converged && r.value("p_sat") < 1e6 * pmax => r,
        _ => {
            let mut o = opts.clone();
            o.init.retain(|k, _| k == "gamma0" || k == "slope");
            o.fixed.retain(|k, _| k == "gamma0" || k == "slope");
            o.bounds.retain(|k, _| k == "gamma0" || k == "slope");
            let mut r = fit_model(&o.spec(ModelKind::PowerLinear), &x, &y, &o)?;
            r.add_flag("linear_fallback");
            r
        }
    };
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    // noise from the given weights, else the spread of successive differences
    let noise = match &opts.sigma {
        Some(s) => s.iter().cloned().fold(0.0, f64::max),
        None => {
            let mut d: Vec<f64> = order.windows(2).map(|w| (y[w[1]] - y[w[0]]).abs()).collect();
            d.sort_by(f64::total_cmp);
            0.5 * d[d.len() / 2] / std::f64::consts::SQRT_2
        }
    };
    if order.windows(2).any(|w| y[w[1]] < y[w[0]] - 3.0 * noise.max(1e-12 * y[w[0]])) {
        r.add_flag("non_monotone");
    }
    r.derive("gamma0_half", "GHz", |p| 0.5 * p[0]);
    Ok(r)
}

/// Linewidth law gamma_const + Σₖ aₖ·Tᵏ over the chosen powers, aₖ ≥ 0.
pub fn fit_temperature_linewidth(points: &[(f64, f64)], terms: &[u32], opts: &FitOptions) -> Result<FitResult> {
    if points.len() < terms.len() + 1 {
        return Err(Error::Input(format!("{} points for {} terms plus constant", points.len(), terms.len())));
    }
    if let Some((t, _)) = points.iter().find(|(t, _)| !(*t > 0.0)) {
        return Err(Error::Input(format!("temperature {t} must be > 0")));
    }
    let (x, y) = split(points);
    fit_model(&opts.spec(ModelKind::TPoly { terms: terms.to_vec() }), &x, &y, opts)
}

/// Line shift b2·T² + b4·T⁴ (zero at T = 0).
pub fn fit_temperature_shift(points: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::Input(format!("{} points; at least 3 required", points.len())));
    }
    if let Some((t, _)) = points.iter().find(|(t, _)| !(*t > 0.0)) {
        return Err(Error::Input(format!("temperature {t} must be > 0")));
    }
    let (x, y) = split(points);
    fit_model(&opts.spec(ModelKind::TShift), &x, &y, opts)
}

/// Phonon model γ(Δ) = A·2πΔ³/(exp(hΔ/k_BT) − 1) (+ offset) over
/// (ground splitting, linewidth) pairs. Derived: `peak_delta`, the
/// splitting of maximal γ at this temperature.
pub fn fit_phonon_model(points: &[(f64, f64)], temperature: f64, with_offset: bool, opts: &FitOptions) -> Result<FitResult> {
    let need = if with_offset { 3 } else { 1 };
    let mut ex = opts.exclude.clone();
    ex.sort_unstable();
    ex.dedup();
    let kept = points.len() - ex.iter().filter(|&&i| i < points.len()).count();
    if kept < need {
        return Err(Error::Input(format!("{kept} usable points; at least {need} required")));
    }
    if let Some((d, _)) = points.iter().find(|(d, _)| !(*d > 0.0)) {
        return Err(Error::Input(format!("ground splitting {d} must be > 0")));
    }
    let (x, y) = split(points);
    let mut r = fit_model(&opts.spec(ModelKind::PhononStrain { temperature, with_offset }), &x, &y, opts)?;
    let peak = PHONON_PEAK_X * PhysicalConstants::default().thermal_frequency(temperature);
    r.derive("peak_delta", "GHz", |_| peak);
    Ok(r)
}
