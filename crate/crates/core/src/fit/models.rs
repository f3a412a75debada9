//! Model definitions: parameter templates, evaluation and data-driven
//! starting values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lm::{LmOptions, ParamSpec};
use crate::error::{Error, Result};
use crate::physics::{phonon_linewidth_unchecked, voigt_unchecked, KB_OVER_H};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelKind {
    Voigt,
    MultiVoigt { n: usize },
    BiLorentzian,
    PowerBroadening,
    /// Γ(P) = gamma0 + slope·P, the fallback of [`ModelKind::PowerBroadening`].
    PowerLinear,
    TPoly { terms: Vec<u32> },
    TShift,
    PhononStrain { temperature: f64, with_offset: bool },
}

impl ModelKind {
    pub fn name(&self) -> String {
        match self {
            ModelKind::Voigt => "voigt".into(),
            ModelKind::MultiVoigt { n } => format!("multi_voigt_{n}"),
            ModelKind::BiLorentzian => "bilorentzian".into(),
            ModelKind::PowerBroadening => "power_broadening".into(),
            ModelKind::PowerLinear => "power_linear".into(),
            ModelKind::TPoly { terms } => {
                let t: Vec<String> = terms.iter().map(u32::to_string).collect();
                format!("t_poly_{}", t.join("_"))
            }
            ModelKind::TShift => "t_shift".into(),
            ModelKind::PhononStrain { .. } => "phonon_strain".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelKind::MultiVoigt { n } if *n == 0 => Err(Error::invalid("model.n", "at least one component")),
            ModelKind::TPoly { terms } => {
                if terms.is_empty() {
                    return Err(Error::invalid("model.terms", "at least one power required"));
                }
                for (i, t) in terms.iter().enumerate() {
                    if ![1, 3, 5, 7].contains(t) {
                        return Err(Error::invalid("model.terms", format!("power {t} not in {{1, 3, 5, 7}}")));
                    }
                    if terms[..i].contains(t) {
                        return Err(Error::invalid("model.terms", format!("power {t} repeated")));
                    }
                }
                Ok(())
            }
            ModelKind::PhononStrain { temperature, .. } if !(*temperature > 0.0) => {
                Err(Error::invalid("model.temperature", format!("{temperature} must be > 0")))
            }
            _ => Ok(()),
        }
    }

    /// Closed-over evaluator f(x; p) in template parameter order.
    pub fn evaluator(&self) -> Box<dyn Fn(f64, &[f64]) -> f64 + Sync> {
        match self.clone() {
            ModelKind::Voigt => Box::new(|x, p| p[3] * voigt_unchecked(x - p[0], p[1], p[2]) + p[4]),
            ModelKind::MultiVoigt { n } => Box::new(move |x, p| {
                let mut acc = p[4 * n];
                for k in 0..n {
                    let q = &p[4 * k..4 * k + 4];
                    acc += q[3] * voigt_unchecked(x - q[0], q[1], q[2]);
                }
                acc
            }),
            ModelKind::BiLorentzian => Box::new(|x, p| p[2] * unit_lorentz(x, p[0], p[1]) - p[5] * unit_lorentz(x, p[3], p[4]) + p[6]),
            ModelKind::PowerBroadening => Box::new(|x, p| p[0] * (1.0 + x / p[1]).sqrt()),
            ModelKind::PowerLinear => Box::new(|x, p| p[0] + p[1] * x),
            ModelKind::TPoly { terms } => Box::new(move |x, p| {
                terms.iter().zip(&p[1..]).fold(p[0], |acc, (&k, &a)| acc + a * x.powi(k as i32))
            }),
            ModelKind::TShift => Box::new(|x, p| {
                let t2 = x * x;
                t2 * (p[0] + p[1] * t2)
            }),
            ModelKind::PhononStrain { temperature, with_offset } => Box::new(move |x, p| {
                let off = if with_offset { p[1] } else { 0.0 };
                phonon_linewidth_unchecked(x, temperature, p[0], KB_OVER_H) + off
            }),
        }
    }

    /// Parameter templates with data-driven starting values.
    pub fn template(&self, x: &[f64], y: &[f64]) -> Result<Vec<ParamSpec>> {
        self.validate()?;
        if x.is_empty() {
            return Err(Error::Input("no data points".into()));
        }
        let (xmin, xmax) = (x[0].min(x[x.len() - 1]), x[0].max(x[x.len() - 1]));
        let span = (xmax - xmin).max(f64::MIN_POSITIVE);
        let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let yscale = ymax.abs().max(ymin.abs()).max(f64::MIN_POSITIVE);
        let pos = |v: f64| v.max(f64::MIN_POSITIVE);
        let width_lo = 1e-9 * span;
        let out = match self {
            ModelKind::Voigt => {
                let pk = dominant_peaks(x, y, 1);
                let (i, w) = pk.first().copied().unwrap_or((argmax(y), 0.1 * span));
                let amp = pos(ymax - ymin);
                vec![
                    ParamSpec::new("center", "GHz", x[i], w),
                    ParamSpec::new("fwhm_l", "GHz", 0.3 * w, w).bounded(0.0, f64::INFINITY),
                    ParamSpec::new("fwhm_g", "GHz", 0.8 * w, w).bounded(0.0, f64::INFINITY),
                    ParamSpec::new("amplitude", "", amp, amp),
                    ParamSpec::new("offset", "", ymin, amp),
                ]
            }
            ModelKind::MultiVoigt { n } => {
                let mut pk = dominant_peaks(x, y, *n);
                if pk.len() < *n {
                    return Err(Error::Input(format!("found {} peaks for {n} components", pk.len())));
                }
                pk.sort_by(|a, b| x[a.0].total_cmp(&x[b.0]));
                let mut v = Vec::with_capacity(4 * n + 1);
                for (k, (i, w)) in pk.into_iter().enumerate() {
                    let amp = pos(y[i] - ymin);
                    let k = k + 1;
                    v.push(ParamSpec::new(&format!("center_{k}"), "GHz", x[i], w));
                    v.push(ParamSpec::new(&format!("fwhm_l_{k}"), "GHz", 0.3 * w, w).bounded(0.0, f64::INFINITY));
                    v.push(ParamSpec::new(&format!("fwhm_g_{k}"), "GHz", 0.8 * w, w).bounded(0.0, f64::INFINITY));
                    v.push(ParamSpec::new(&format!("amplitude_{k}"), "", amp, amp));
                }
                let amp = pos(ymax - ymin);
                v.push(ParamSpec::new("offset", "", ymin, amp));
                v
            }
            ModelKind::BiLorentzian => {
                let neg: Vec<f64> = y.iter().map(|v| -v).collect();
                let dip = dominant_peaks(x, &neg, 1).first().copied();
                let edge = 0.5 * (y[0] + y[y.len() - 1]);
                let broad_amp = pos(2.0 * (ymax - edge));
                let offset = ymax - broad_amp;
                let (hc, hw, depth) = match dip {
                    Some((i, w)) => (x[i], w, pos(ymax - y[i])),
                    None => (x[argmax(y)], 0.1 * span, 1e-3 * broad_amp),
                };
                vec![
                    ParamSpec::new("broad_center", "GHz", hc, span),
                    ParamSpec::new("broad_fwhm", "GHz", span, span).bounded(width_lo, f64::INFINITY),
                    ParamSpec::new("broad_amplitude", "", broad_amp, broad_amp),
                    ParamSpec::new("hole_center", "GHz", hc, hw),
                    ParamSpec::new("hole_fwhm", "GHz", hw, hw).bounded(width_lo, f64::INFINITY),
                    ParamSpec::new("hole_depth", "", depth, broad_amp).bounded(0.0, f64::INFINITY),
                    ParamSpec::new("offset", "", offset, broad_amp),
                ]
            }
            ModelKind::PowerBroadening => {
                let psat = pos(median(x));
                let g0 = pos(y[0] / (1.0 + x[0] / psat).sqrt());
                vec![
                    ParamSpec::new("gamma0", "GHz", g0, g0).bounded(0.0, f64::INFINITY),
                    ParamSpec::new("p_sat", "", psat, psat).bounded(1e-12 * psat, f64::INFINITY),
                ]
            }
            ModelKind::PowerLinear => {
                let slope = (y[y.len() - 1] - y[0]) / span;
                vec![
                    ParamSpec::new("gamma0", "GHz", y[0] - slope * x[0], yscale),
                    ParamSpec::new("slope", "GHz", slope, yscale / span),
                ]
            }
            ModelKind::TPoly { terms } => {
                let tmax = pos(xmax.abs());
                let rise = (ymax - ymin).max(1e-3 * yscale);
                let mut v = vec![ParamSpec::new("gamma_const", "GHz", ymin, yscale)];
                for &k in terms {
                    let s = rise / tmax.powi(k as i32);
                    v.push(
                        ParamSpec::new(&format!("a{k}"), &format!("GHz/K^{k}"), s / terms.len() as f64, s)
                            .bounded(0.0, f64::INFINITY),
                    );
                }
                v
            }
            ModelKind::TShift => {
                let tmax = pos(xmax.abs());
                vec![
                    ParamSpec::new("b2", "GHz/K^2", y[y.len() - 1] / (tmax * tmax), yscale / (tmax * tmax)),
                    ParamSpec::new("b4", "GHz/K^4", 0.0, yscale / tmax.powi(4)),
                ]
            }
            ModelKind::PhononStrain { temperature, with_offset } => {
                let f: Vec<f64> = x
                    .iter()
                    .map(|&d| phonon_linewidth_unchecked(d, *temperature, 1.0, KB_OVER_H))
                    .collect();
                let ff: f64 = f.iter().map(|v| v * v).sum();
                let fy: f64 = f.iter().zip(y).map(|(a, b)| a * b).sum();
                let a = if ff > 0.0 { (fy / ff).max(0.0) } else { 0.0 };
                let a_scale = if a > 0.0 { a } else { yscale / f.iter().cloned().fold(f64::MIN_POSITIVE, f64::max) };
                let mut v = vec![ParamSpec::new("amplitude", "1/GHz^2", a, a_scale).bounded(0.0, f64::INFINITY)];
                if *with_offset {
                    v.push(ParamSpec::new("offset", "GHz", 0.0, yscale));
                }
                v
            }
        };
        Ok(out)
    }
}

fn unit_lorentz(x: f64, c: f64, fwhm: f64) -> f64 {
    let d = 2.0 * (x - c) / fwhm;
    1.0 / (1.0 + d * d)
}

fn argmax(y: &[f64]) -> usize {
    y.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |m, (i, &v)| if v > m.1 { (i, v) } else { m })
        .0
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

/// Up to `n` interior local maxima by decreasing prominence, each with a
/// half-prominence width estimate.
pub(crate) fn dominant_peaks(x: &[f64], y: &[f64], n: usize) -> Vec<(usize, f64)> {
    let len = y.len();
    if len < 3 {
        return Vec::new();
    }
    let mut cands = Vec::new();
    let mut i = 1;
    while i < len - 1 {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < len && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < len && y[j + 1] < y[i] {
                let k = (i + j) / 2;
                let h = y[k];
                let lmin = y[..k].iter().rev().take_while(|&&v| v <= h).cloned().fold(h, f64::min);
                let rmin = y[k + 1..].iter().take_while(|&&v| v <= h).cloned().fold(h, f64::min);
                let base = lmin.max(rmin);
                cands.push((k, h - base, base));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cands
        .into_iter()
        .take(n)
        .map(|(k, prom, base)| {
            let level = base + 0.5 * prom;
            let l = (0..k).rev().find(|&i| y[i] <= level).unwrap_or(0);
            let r = (k + 1..len).find(|&i| y[i] <= level).unwrap_or(len - 1);
            let w = (x[r] - x[l]).abs().max((x[1] - x[0]).abs());
            (k, w)
        })
        .collect()
}

/// Model selection plus fixed values and bounds by parameter name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub fixed_params: BTreeMap<String, f64>,
    #[serde(default)]
    pub bounds: BTreeMap<String, (f64, f64)>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, fixed_params: BTreeMap::new(), bounds: BTreeMap::new() }
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        for (name, (lo, hi)) in &self.bounds {
            if !(lo < hi) {
                return Err(Error::invalid(format!("bounds.{name}"), format!("lo {lo} must be < hi {hi}")));
            }
            if self.fixed_params.contains_key(name) {
                return Err(Error::invalid(format!("bounds.{name}"), "parameter is both fixed and bounded"));
            }
        }
        Ok(())
    }
}

/// Per-call fit inputs beyond the data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitOptions {
    pub init: BTreeMap<String, f64>,
    pub fixed: BTreeMap<String, f64>,
    pub bounds: BTreeMap<String, (f64, f64)>,
    /// Indices of points to leave out.
    pub exclude: Vec<usize>,
    /// Per-point 1σ weights (after exclusion indices are applied to the
    /// full data set).
    pub sigma: Option<Vec<f64>>,
    pub lm: LmOptions,
}

impl FitOptions {
    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        ModelSpec { kind, fixed_params: self.fixed.clone(), bounds: self.bounds.clone() }
    }
}

/// Applies user overrides to template parameters.
pub(crate) fn apply_overrides(
    params: &mut [ParamSpec],
    spec: &ModelSpec,
    init: &BTreeMap<String, f64>,
) -> Result<()> {
    spec.validate()?;
    let known = |name: &str| params.iter().any(|p| p.name == name);
    for name in init.keys().chain(spec.fixed_params.keys()).chain(spec.bounds.keys()) {
        if !known(name) {
            let names: Vec<&str> = params.iter().map(|p| p.name.as_str()).collect();
            return Err(Error::invalid(
                format!("param.{name}"),
                format!("unknown parameter for {}; expected one of {}", spec.kind.name(), names.join(", ")),
            ));
        }
    }
    for p in params.iter_mut() {
        if let Some(&(lo, hi)) = spec.bounds.get(&p.name) {
            p.lo = lo;
            p.hi = hi;
        }
        if let Some(&v) = init.get(&p.name) {
            p.init = v;
            if v != 0.0 && v.is_finite() {
                p.scale = p.scale.min(v.abs()).max(1e-3 * p.scale);
            }
        } else {
            p.init = p.init.clamp(p.lo, p.hi);
        }
        if let Some(&v) = spec.fixed_params.get(&p.name) {
            p.init = v;
            p.fixed = true;
            p.lo = f64::NEG_INFINITY;
            p.hi = f64::INFINITY;
        }
    }
    Ok(())
}
