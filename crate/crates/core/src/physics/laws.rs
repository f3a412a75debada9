//! Temperature laws for the homogeneous linewidth and line shift, and the
//! phonon-mediated decoherence model linking linewidth to ground splitting.

use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Position of the maximum of x³/(eˣ − 1): the root of 3(1 − e⁻ˣ) = x.
pub const PHONON_PEAK_X: f64 = 2.821_439_372_122_078_9;

/// Temperature dependence of an ensemble line.
///
/// `gamma_inh` is the Gaussian (strain) FWHM; `a1…a7` build the Lorentzian
/// FWHM a1·T + a3·T³ + a5·T⁵ + a7·T⁷; `b2, b4` the line shift b2·T² + b4·T⁴,
/// with a positive shift meaning a red shift as T rises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BroadeningLaw {
    pub gamma_inh: f64,
    pub a1: f64,
    pub a3: f64,
    pub a5: f64,
    pub a7: f64,
    pub b2: f64,
    pub b4: f64,
}

impl Default for BroadeningLaw {
    /// Calibrated defaults, not fitted values: 10 GHz strain width, a T³
    /// broadening that washes out the ground doublet just above 60 K and
    /// all fine structure by 130 K, and a shift reaching about 1 nm
    /// (≈550 GHz) between 5 K and room temperature.
    fn default() -> Self {
        Self {
            gamma_inh: 10.0,
            a1: 0.0,
            a3: DEFAULT_A3,
            a5: 0.0,
            a7: 0.0,
            b2: 5.0e-4,
            b4: 6.2e-8,
        }
    }
}

/// Default T³ coefficient, GHz/K³.
pub const DEFAULT_A3: f64 = 2.5e-4;

impl BroadeningLaw {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_inh", self.gamma_inh),
            ("a1", self.a1),
            ("a3", self.a3),
            ("a5", self.a5),
            ("a7", self.a7),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("broadening.{name}"), format!("{v} must be >= 0")));
            }
        }
        for (name, v) in [("b2", self.b2), ("b4", self.b4)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("broadening.{name}"), "must be finite"));
            }
        }
        Ok(())
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain("temperature must be non-negative", t));
    }
    Ok(())
}

/// Temperature-dependent Lorentzian FWHM in GHz (inhomogeneous part excluded).
pub fn homogeneous_width(t: f64, law: &BroadeningLaw) -> Result<f64> {
    check_temperature(t)?;
    let t2 = t * t;
    Ok(t * (law.a1 + t2 * (law.a3 + t2 * (law.a5 + t2 * law.a7))))
}

/// Signed line shift in GHz; positive values move lines to lower frequency.
pub fn line_shift(t: f64, law: &BroadeningLaw) -> Result<f64> {
    check_temperature(t)?;
    let t2 = t * t;
    Ok(t2 * (law.b2 + t2 * law.b4))
}

/// Linewidth γ = A·2π·Δ³/(exp(hΔ/k_BT) − 1) for a ground splitting `delta`
/// (GHz) at temperature `t` (K), amplitude `amplitude` in GHz⁻².
pub fn phonon_linewidth(
    delta: f64,
    t: f64,
    amplitude: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain("ground splitting must be positive", delta));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("temperature must be positive", t));
    }
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::domain("phonon amplitude must be positive", amplitude));
    }
    Ok(phonon_linewidth_unchecked(delta, t, amplitude, constants.kb_over_h()))
}

/// Same expression without argument checks, extended continuously to 0 at
/// Δ = 0. Used by the fit models where the amplitude may touch zero.
pub(crate) fn phonon_linewidth_unchecked(delta: f64, t: f64, amplitude: f64, kb_over_h: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let x = delta / (kb_over_h * t);
    amplitude * 2.0 * std::f64::consts::PI * delta * delta * delta / x.exp_m1()
}

/// Ground splitting at which [`phonon_linewidth`] peaks for temperature `t`.
pub fn phonon_peak_splitting(t: f64, constants: &PhysicalConstants) -> f64 {
    PHONON_PEAK_X * constants.kb_over_h() * t
}
