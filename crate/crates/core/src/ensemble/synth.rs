//! Ensemble PLE synthesis: isotope subensembles × four lines, each a Voigt
//! profile with a temperature-dependent Lorentzian part.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectrum::{format_number, ScanGrid, Spectrum};
use crate::error::{Error, Result};
use crate::physics::{
    check_voigt_widths, homogeneous_width, lifetime_limited_linewidth, line_shift, validate_isotopes,
    voigt_fwhm, voigt_unchecked, BroadeningLaw, FineStructure, IsotopeLabel, IsotopeSpecies,
    PerTransition, PhysicalConstants, Transition,
};

/// Configuration of an ensemble PLE measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub isotopes: Vec<IsotopeSpecies>,
    pub broadening: BroadeningLaw,
    /// K.
    pub temperature: f64,
    /// Replaces the thermal line weights when present.
    pub amplitude_overrides: Option<PerTransition<f64>>,
    /// Replaces `broadening.gamma_inh` line by line when present.
    pub gamma_inh_overrides: Option<PerTransition<f64>>,
    pub detection_efficiency: f64,
    pub constants: PhysicalConstants,
}

/// ZPL centroid of ²⁸SiV at 738 nm, GHz.
pub const ZPL_CENTROID_738NM: f64 = 2.997_924_58e8 / 738.0;

/// Natural ²⁹Si and ³⁰Si satellite offsets from the ²⁸Si lines, GHz.
/// Placeholder calibration, not measured values.
pub const SI29_ZPL_OFFSET: f64 = 85.0;
pub const SI30_ZPL_OFFSET: f64 = 170.0;

/// Excited-state lifetimes used by the reference configuration, ns. The
/// upper-branch value is a calibration.
pub const TAU_LOWER: f64 = 1.6;
pub const TAU_UPPER: f64 = 0.5;

/// Natural-abundance isotope set with the measured per-isotope splittings
/// (²⁹Si and ³⁰Si use the mean of their two ground and two excited rows).
pub fn natural_isotopes(zpl_centroid: f64) -> Vec<IsotopeSpecies> {
    let fs = |gs: f64, es: f64| FineStructure {
        zpl_centroid,
        delta_gs: gs,
        delta_es: es,
        tau_lower: TAU_LOWER,
        tau_upper: TAU_UPPER,
    };
    vec![
        IsotopeSpecies {
            label: IsotopeLabel::Si28,
            abundance: 0.922,
            zpl_offset: 0.0,
            fine_structure: fs(48.1, 256.6),
        },
        IsotopeSpecies {
            label: IsotopeLabel::Si29,
            abundance: 0.047,
            zpl_offset: SI29_ZPL_OFFSET,
            fine_structure: fs(47.75, 256.15),
        },
        IsotopeSpecies {
            label: IsotopeLabel::Si30,
            abundance: 0.031,
            zpl_offset: SI30_ZPL_OFFSET,
            fine_structure: fs(49.0, 257.4),
        },
    ]
}

impl EnsembleConfig {
    /// Natural-abundance ensemble at `temperature` with the default
    /// broadening calibration.
    pub fn reference(temperature: f64) -> Self {
        Self {
            isotopes: natural_isotopes(ZPL_CENTROID_738NM),
            broadening: BroadeningLaw::default(),
            temperature,
            amplitude_overrides: None,
            gamma_inh_overrides: None,
            detection_efficiency: 1.0,
            constants: PhysicalConstants::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_isotopes(&self.isotopes)?;
        self.broadening.validate()?;
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid("temperature", format!("{} must be > 0", self.temperature)));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(Error::invalid(
                "detection_efficiency",
                format!("{} outside (0, 1]", self.detection_efficiency),
            ));
        }
        if let Some(w) = &self.amplitude_overrides {
            for (t, v) in w.iter() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!("amplitude_overrides.{t}"), format!("{v} must be >= 0")));
                }
            }
        }
        if let Some(g) = &self.gamma_inh_overrides {
            for (t, v) in g.iter() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!("gamma_inh_overrides.{t}"), format!("{v} must be >= 0")));
                }
            }
        }
        Ok(())
    }

    /// Relative line weights for one isotope: overrides, or Boltzmann
    /// occupation of the upper ground branch for B and D.
    pub fn line_weights(&self, iso: &IsotopeSpecies) -> PerTransition<f64> {
        if let Some(w) = self.amplitude_overrides {
            return w;
        }
        let boltz = (-iso.fine_structure.delta_gs / self.constants.thermal_frequency(self.temperature)).exp();
        PerTransition { a: 1.0, b: boltz, c: 1.0, d: boltz }
    }

    /// All lines in accumulation order: isotopes as configured, then A..D.
    pub fn lines(&self) -> Result<Vec<Line>> {
        self.validate()?;
        let hom = homogeneous_width(self.temperature, &self.broadening)?;
        let shift = line_shift(self.temperature, &self.broadening)?;
        let mut out = Vec::with_capacity(4 * self.isotopes.len());
        for iso in &self.isotopes {
            let centers = iso.line_centers();
            let weights = self.line_weights(iso);
            for t in Transition::ALL {
                let fwhm_l = hom + lifetime_limited_linewidth(iso.fine_structure.lifetime(t))?;
                let fwhm_g = self
                    .gamma_inh_overrides
                    .map(|g| g.get(t))
                    .unwrap_or(self.broadening.gamma_inh);
                check_voigt_widths(fwhm_l, fwhm_g)?;
                out.push(Line {
                    isotope: iso.label,
                    transition: t,
                    center: centers.get(t) - shift,
                    fwhm_l,
                    fwhm_g,
                    weight: self.detection_efficiency * iso.abundance * weights.get(t),
                });
            }
        }
        Ok(out)
    }
}

/// One Voigt line of the synthesized spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub isotope: IsotopeLabel,
    pub transition: Transition,
    /// GHz, shift included.
    pub center: f64,
    pub fwhm_l: f64,
    pub fwhm_g: f64,
    /// Peak height contribution.
    pub weight: f64,
}

impl Line {
    pub fn eval(&self, nu: f64) -> f64 {
        self.weight * voigt_unchecked(nu - self.center, self.fwhm_l, self.fwhm_g)
    }
}

/// Noise-free PLE spectrum. Each grid point is an independent sum over the
/// lines in [`EnsembleConfig::lines`] order, so the result does not depend
/// on how points are scheduled across threads.
pub fn synthesize_ple(config: &EnsembleConfig, grid: &ScanGrid) -> Result<Spectrum> {
    grid.validate()?;
    let lines = config.lines()?;
    let freqs = grid.frequencies();
    let intensities: Vec<f64> = freqs
        .par_iter()
        .map(|&nu| lines.iter().fold(0.0, |acc, l| acc + l.eval(nu)))
        .collect();
    let mut s = Spectrum::new(freqs, intensities)?;
    s.set_meta("kind", "ple");
    s.set_meta("temperature_k", format_number(config.temperature));
    s.set_meta("lines", lines.len().to_string());
    if !lines.iter().any(|l| l.center >= grid.start && l.center <= grid.stop) {
        s.add_warning("no transition inside scan grid");
    }
    let narrowest = lines
        .iter()
        .map(|l| voigt_fwhm(l.fwhm_l, l.fwhm_g).unwrap_or(f64::INFINITY))
        .fold(f64::INFINITY, f64::min);
    if grid.step() > narrowest / 5.0 {
        s.add_warning(&format!(
            "grid step {} GHz exceeds one fifth of the narrowest line width {} GHz",
            format_number(grid.step()),
            format_number(narrowest)
        ));
    }
    Ok(s)
}

/// One spectrum per temperature, in the given order.
pub fn temperature_sweep(config: &EnsembleConfig, grid: &ScanGrid, temperatures: &[f64]) -> Result<Vec<Spectrum>> {
    if temperatures.is_empty() {
        return Err(Error::invalid("temperatures", "at least one temperature required"));
    }
    if let Some(t) = temperatures.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::invalid("temperatures", format!("{t} must be > 0")));
    }
    temperatures
        .par_iter()
        .map(|&t| {
            let mut c = config.clone();
            c.temperature = t;
            synthesize_ple(&c, grid)
        })
        .collect()
}
