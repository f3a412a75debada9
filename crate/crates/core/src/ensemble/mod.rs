//! Ensemble PLE spectra: synthesis, temperature sweeps, detection noise and
//! peak analysis.

mod noise;
mod peaks;
mod spectrum;
mod synth;

pub use noise::{add_noise, NoiseKind, NoiseModel};
pub use peaks::{baseline_corrected_area, find_peaks, has_local_minimum, integrated_area, Peak};
pub use spectrum::{format_number, ScanGrid, Spectrum, CSV_HEADER};
pub use synth::{
    natural_isotopes, synthesize_ple, temperature_sweep, EnsembleConfig, Line, SI29_ZPL_OFFSET, SI30_ZPL_OFFSET,
    TAU_LOWER, TAU_UPPER, ZPL_CENTROID_738NM,
};
