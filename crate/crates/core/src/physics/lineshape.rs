//! Peak-normalized line profiles. All widths are full widths at half
//! maximum in GHz.

use std::f64::consts::LN_2;

use super::faddeeva::faddeeva_re;
use crate::error::{Error, Result};

fn check_width(fwhm: f64) -> Result<()> {
    if !(fwhm > 0.0) || !fwhm.is_finite() {
        return Err(Error::domain("FWHM must be positive", fwhm));
    }
    Ok(())
}

pub fn lorentzian(nu: f64, nu0: f64, fwhm: f64) -> Result<f64> {
    check_width(fwhm)?;
    Ok(lorentzian_unchecked(nu - nu0, fwhm))
}

#[inline]
pub(crate) fn lorentzian_unchecked(detuning: f64, fwhm: f64) -> f64 {
    let u = 2.0 * detuning / fwhm;
    1.0 / (1.0 + u * u)
}

pub fn gaussian(nu: f64, nu0: f64, fwhm: f64) -> Result<f64> {
    check_width(fwhm)?;
    Ok(gaussian_unchecked(nu - nu0, fwhm))
}

#[inline]
pub(crate) fn gaussian_unchecked(detuning: f64, fwhm: f64) -> f64 {
    let u = detuning / fwhm;
    (-4.0 * LN_2 * u * u).exp()
}

/// Gaussian standard deviation for a given FWHM.
pub fn sigma_from_fwhm(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * LN_2).sqrt())
}

/// Peak-normalized Voigt profile: the convolution of a Lorentzian of FWHM
/// `fwhm_l` with a Gaussian of FWHM `fwhm_g`, via Re w(z).
pub fn voigt(nu: f64, nu0: f64, fwhm_l: f64, fwhm_g: f64) -> Result<f64> {
    check_voigt_widths(fwhm_l, fwhm_g)?;
    Ok(voigt_unchecked(nu - nu0, fwhm_l, fwhm_g))
}

pub(crate) fn check_voigt_widths(fwhm_l: f64, fwhm_g: f64) -> Result<()> {
    if !(fwhm_l >= 0.0) || !fwhm_l.is_finite() {
        return Err(Error::domain("Lorentzian FWHM must be non-negative", fwhm_l));
    }
    if !(fwhm_g >= 0.0) || !fwhm_g.is_finite() {
        return Err(Error::domain("Gaussian FWHM must be non-negative", fwhm_g));
    }
    if fwhm_l == 0.0 && fwhm_g == 0.0 {
        return Err(Error::domain("Voigt needs at least one non-zero width", 0.0));
    }
    Ok(())
}

/// Widths must already satisfy [`check_voigt_widths`].
pub(crate) fn voigt_unchecked(detuning: f64, fwhm_l: f64, fwhm_g: f64) -> f64 {
    if fwhm_g == 0.0 {
        return lorentzian_unchecked(detuning, fwhm_l);
    }
    if fwhm_l == 0.0 {
        return gaussian_unchecked(detuning, fwhm_g);
    }
    let scale = std::f64::consts::SQRT_2 * sigma_from_fwhm(fwhm_g);
    let y = 0.5 * fwhm_l / scale;
    faddeeva_re(detuning / scale, y) / faddeeva_re(0.0, y)
}

/// Olivero–Longbothum closed-form Voigt FWHM (≈0.02 % accuracy).
pub fn voigt_fwhm(fwhm_l: f64, fwhm_g: f64) -> Result<f64> {
    check_voigt_widths(fwhm_l, fwhm_g)?;
    Ok(0.5346 * fwhm_l + (0.2166 * fwhm_l * fwhm_l + fwhm_g * fwhm_g).sqrt())
}
