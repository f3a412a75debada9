//! Driven few-level dynamics: Λ-system steady states and CPT scans,
//! pump–probe hole burning, and two-level antibunching.

mod g2;
mod holeburn;
mod lambda;

pub use g2::{g2_half_delay, g2_two_level};
pub use holeburn::{hole_power_series, holeburn_scan, probe_grid, HoleBurnConfig, HolePoint, HOLEBURN_REL_TOL};
pub use lambda::{cpt_contrast, cpt_scan, steady_state_lambda, DensityMatrix3, LambdaConfig, E, G1, G2};
