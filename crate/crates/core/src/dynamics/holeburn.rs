//! Pump–probe spectral hole burning in an inhomogeneously broadened line,
//! with incoherent (rate-equation) saturation of each frequency class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{format_number, Spectrum};
use crate::error::{Error, Result};
use crate::fit::{fit_bilorentzian, FitOptions};
use crate::physics::sigma_from_fwhm;
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleBurnConfig {
    /// Homogeneous Lorentzian FWHM, GHz.
    pub gamma_hom: f64,
    /// Inhomogeneous Gaussian FWHM, GHz.
    pub gamma_inh: f64,
    /// Saturation parameters at line center.
    pub s_pump: f64,
    pub s_probe: f64,
    /// Pump frequency relative to the inhomogeneous center, GHz.
    pub nu_pump: f64,
}

impl HoleBurnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_hom > 0.0) || !self.gamma_hom.is_finite() {
            return Err(Error::invalid("holeburn.gamma_hom", format!("{} must be > 0", self.gamma_hom)));
        }
        for (name, v) in [("gamma_inh", self.gamma_inh), ("s_pump", self.s_pump), ("s_probe", self.s_probe)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("holeburn.{name}"), format!("{v} must be >= 0")));
            }
        }
        if !self.nu_pump.is_finite() {
            return Err(Error::invalid("holeburn.nu_pump", "must be finite"));
        }
        Ok(())
    }

    /// Excited fraction of the class at `nu0` with the probe at `probe`.
    pub fn class_excitation(&self, nu0: f64, probe: f64) -> f64 {
        let lor = |d: f64| {
            let x = 2.0 * d / self.gamma_hom;
            1.0 / (1.0 + x * x)
        };
        let drive = lor(self.nu_pump - nu0) * self.s_pump + lor(probe - nu0) * self.s_probe;
        drive / (2.0 * (1.0 + drive))
    }
}

/// Relative tolerance of the class integral.
pub const HOLEBURN_REL_TOL: f64 = 1e-6;

fn scan_point(cfg: &HoleBurnConfig, probe: f64) -> Result<f64> {
    if cfg.gamma_inh == 0.0 {
        return Ok(cfg.class_excitation(0.0, probe));
    }
    let sigma = sigma_from_fwhm(cfg.gamma_inh);
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let f = |nu0: f64| norm * (-0.5 * (nu0 / sigma).powi(2)).exp() * cfg.class_excitation(nu0, probe);
    let lim = 12.0 * sigma;
    let g = cfg.gamma_hom;
    let mut pts = vec![-lim, lim, 0.0];
    for c in [cfg.nu_pump, probe] {
        pts.extend([c - 5.0 * g, c - g, c, c + g, c + 5.0 * g]);
    }
    pts.retain(|p| (-lim..=lim).contains(p));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * lim);
    let opts = QuadOptions { rel_tol: HOLEBURN_REL_TOL, abs_tol: 1e-300, max_intervals: 4000 };
    integrate(f, &pts, opts).map(|r| r.value).map_err(|e| match e {
        Error::Numerical { detail, .. } => Error::numerical("hole burning", format!("probe detuning {probe} GHz: {detail}")),
        other => other,
    })
}

/// Ensemble excited fraction versus probe frequency (relative to the
/// inhomogeneous center, GHz, strictly increasing).
pub fn holeburn_scan(cfg: &HoleBurnConfig, probe_detunings: &[f64]) -> Result<Spectrum> {
    cfg.validate()?;
    let values: Vec<f64> = probe_detunings
        .par_iter()
        .map(|&d| scan_point(cfg, d))
        .collect::<Result<_>>()?;
    let mut s = Spectrum::new(probe_detunings.to_vec(), values)?;
    s.set_meta("kind", "holeburn");
    s.set_meta("gamma_hom_ghz", format_number(cfg.gamma_hom));
    s.set_meta("gamma_inh_ghz", format_number(cfg.gamma_inh));
    s.set_meta("s_pump", format_number(cfg.s_pump));
    s.set_meta("s_probe", format_number(cfg.s_probe));
    s.set_meta("nu_pump_ghz", format_number(cfg.nu_pump));
    Ok(s)
}

/// Symmetric probe grid of `points` samples over `nu_pump ± half_width`.
pub fn probe_grid(cfg: &HoleBurnConfig, half_width: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| cfg.nu_pump - half_width + 2.0 * half_width * i as f64 / (points - 1) as f64)
        .collect()
}

/// One power point of a hole-burning series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolePoint {
    pub s_pump: f64,
    /// Bi-Lorentzian hole FWHM and its 1σ, GHz.
    pub hole_fwhm: f64,
    pub hole_fwhm_sigma: Option<f64>,
    pub flags: Vec<String>,
}

/// Simulates and fits a hole at each pump saturation in `s_values`,
/// probing over `nu_pump ± half_width` with `points` samples. Hole FWHMs
/// tend to 2·gamma_hom as the pump power vanishes.
pub fn hole_power_series(cfg: &HoleBurnConfig, s_values: &[f64], half_width: f64, points: usize) -> Result<Vec<HolePoint>> {
    cfg.validate()?;
    if !(half_width > 0.0) || points < 8 {
        return Err(Error::invalid("holeburn.probe", format!("half width {half_width} and {points} points too small")));
    }
    if let Some(s) = s_values.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::invalid("holeburn.s_pump", format!("series value {s} must be > 0")));
    }
    let grid = probe_grid(cfg, half_width, points);
    s_values
        .iter()
        .map(|&s_pump| {
            let c = HoleBurnConfig { s_pump, ..*cfg };
            let spec = holeburn_scan(&c, &grid)?;
            let fit = fit_bilorentzian(&spec, &FitOptions::default())?;
            Ok(HolePoint {
                s_pump,
                hole_fwhm: fit.value("hole_fwhm"),
                hole_fwhm_sigma: fit.sigma("hole_fwhm"),
                flags: fit.flags.clone(),
            })
        })
        .collect()
}
