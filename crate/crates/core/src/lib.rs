//! Simulation and analysis of silicon-vacancy color-center spectroscopy:
//! ensemble PLE synthesis, spectral hole burning, coherent population
//! trapping and the nonlinear fits that extract linewidths and splittings.

pub mod error;
pub mod dynamics;
pub mod ensemble;
pub mod fit;
pub mod physics;
pub mod quadrature;

pub use error::{Error, Result};
