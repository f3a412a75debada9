//! Physical constants in the linear-frequency unit system used throughout
//! the crate (GHz, K, ns, nm).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant over Planck constant, GHz/K (exact SI 2019 values).
pub const KB_OVER_H: f64 = 1.380649e-23 / 6.62607015e-34 * 1e-9;

/// Speed of light in nm·GHz.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    kb_over_h: f64,
    c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            kb_over_h: KB_OVER_H,
            c: SPEED_OF_LIGHT,
        }
    }
}

impl PhysicalConstants {
    /// Builds an overridden constant set. Overrides must stay within the
    /// physically sensible ranges `kB/h ∈ [20.83, 20.84]` GHz/K and
    /// `c ∈ [2.9979e8, 2.9980e8]` nm·GHz.
    pub fn new(kb_over_h: f64, c: f64) -> Result<Self> {
        if !(20.83..=20.84).contains(&kb_over_h) {
            return Err(Error::invalid(
                "constants.kb_over_h",
                format!("{kb_over_h} outside [20.83, 20.84] GHz/K"),
            ));
        }
        if !(2.9979e8..=2.9980e8).contains(&c) {
            return Err(Error::invalid(
                "constants.c",
                format!("{c} outside [2.9979e8, 2.9980e8] nm·GHz"),
            ));
        }
        Ok(Self { kb_over_h, c })
    }

    pub fn kb_over_h(&self) -> f64 {
        self.kb_over_h
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Thermal frequency k_B·T/h in GHz.
    pub fn thermal_frequency(&self, temperature: f64) -> f64 {
        self.kb_over_h * temperature
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    WavelengthToFrequency,
    FrequencyToWavelength,
}

/// Converts nm → GHz or GHz → nm via ν = c/λ.
pub fn wavelength_frequency_convert(
    value: f64,
    direction: Conversion,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::domain("wavelength/frequency must be positive", value));
    }
    Ok(match direction {
        Conversion::WavelengthToFrequency => constants.c / value,
        Conversion::FrequencyToWavelength => constants.c / value,
    })
}
