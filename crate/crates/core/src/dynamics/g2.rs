//! Antibunching of a driven two-level emitter.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// g²(τ) = 1 − exp(−2π(Γ + W)τ), τ in ns and the rates as FWHM-style GHz.
pub fn g2_two_level(tau_values: &[f64], gamma_total: f64, pump_rate: f64) -> Result<Vec<f64>> {
    if !(gamma_total > 0.0) || !gamma_total.is_finite() {
        return Err(Error::domain("gamma_total must be > 0", gamma_total));
    }
    if !(pump_rate >= 0.0) || !pump_rate.is_finite() {
        return Err(Error::domain("pump_rate must be >= 0", pump_rate));
    }
    if let Some(t) = tau_values.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::domain("delay must be >= 0", *t));
    }
    let rate = 2.0 * PI * (gamma_total + pump_rate);
    Ok(tau_values.iter().map(|t| -(-rate * t).exp_m1()).collect())
}

/// Delay at which g² crosses ½.
pub fn g2_half_delay(gamma_total: f64, pump_rate: f64) -> f64 {
    std::f64::consts::LN_2 / (2.0 * PI * (gamma_total + pump_rate))
}
