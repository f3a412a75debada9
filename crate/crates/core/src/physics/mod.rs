//! Physical constants, the SiV level scheme, line profiles and the
//! temperature and strain laws. Everything here is a pure function of its
//! arguments.

mod constants;
mod faddeeva;
mod laws;
mod levels;
mod lineshape;

pub use constants::{wavelength_frequency_convert, Conversion, PhysicalConstants, KB_OVER_H, SPEED_OF_LIGHT};
pub use faddeeva::{erfcx, faddeeva_re};
pub use laws::{
    homogeneous_width, line_shift, phonon_linewidth, phonon_peak_splitting, BroadeningLaw, DEFAULT_A3,
    PHONON_PEAK_X,
};
pub(crate) use laws::phonon_linewidth_unchecked;
pub use levels::{
    lifetime_limited_linewidth, transition_frequencies, validate_isotopes, FineStructure, IsotopeLabel,
    IsotopeSpecies, PerTransition, Transition,
};
pub use lineshape::{gaussian, lorentzian, sigma_from_fwhm, voigt, voigt_fwhm};
pub(crate) use lineshape::{check_voigt_widths, voigt_unchecked};
