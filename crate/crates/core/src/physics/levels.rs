//! The four-level SiV fine structure and its silicon-isotope subensembles.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the four zero-phonon-line transitions, in order of decreasing
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Transition {
    A,
    B,
    C,
    D,
}

impl Transition {
    pub const ALL: [Transition; 4] = [Transition::A, Transition::B, Transition::C, Transition::D];

    /// Transitions starting from the upper ground-state branch.
    pub fn from_upper_ground(self) -> bool {
        matches!(self, Transition::B | Transition::D)
    }

    /// Transitions ending in the upper excited-state branch.
    pub fn from_upper_excited(self) -> bool {
        matches!(self, Transition::A | Transition::B)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Transition::A => "A",
            Transition::B => "B",
            Transition::C => "C",
            Transition::D => "D",
        };
        f.write_str(s)
    }
}

/// Per-transition values, indexed by [`Transition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerTransition<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Copy> PerTransition<T> {
    pub fn splat(v: T) -> Self {
        Self { a: v, b: v, c: v, d: v }
    }

    pub fn get(&self, t: Transition) -> T {
        match t {
            Transition::A => self.a,
            Transition::B => self.b,
            Transition::C => self.c,
            Transition::D => self.d,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Transition, T)> + '_ {
        Transition::ALL.into_iter().map(move |t| (t, self.get(t)))
    }
}

/// Electronic structure of one SiV center species. Frequencies in GHz,
/// lifetimes in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineStructure {
    pub zpl_centroid: f64,
    pub delta_gs: f64,
    pub delta_es: f64,
    pub tau_lower: f64,
    pub tau_upper: f64,
}

impl FineStructure {
    pub fn new(
        zpl_centroid: f64,
        delta_gs: f64,
        delta_es: f64,
        tau_lower: f64,
        tau_upper: f64,
    ) -> Result<Self> {
        let fs = Self {
            zpl_centroid,
            delta_gs,
            delta_es,
            tau_lower,
            tau_upper,
        };
        fs.validate()?;
        Ok(fs)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.zpl_centroid.is_finite() {
            return Err(Error::invalid("zpl_centroid", "must be finite"));
        }
        if !(self.delta_gs > 0.0) {
            return Err(Error::invalid("delta_gs", format!("{} must be > 0", self.delta_gs)));
        }
        if !(self.delta_es > self.delta_gs) {
            return Err(Error::invalid(
                "delta_es",
                format!("{} must exceed delta_gs = {}", self.delta_es, self.delta_gs),
            ));
        }
        if !(self.tau_lower > 0.0) {
            return Err(Error::invalid("tau_lower", format!("{} must be > 0", self.tau_lower)));
        }
        if !(self.tau_upper > 0.0) || self.tau_upper > self.tau_lower {
            return Err(Error::invalid(
                "tau_upper",
                format!(
                    "{} must be > 0 and not exceed tau_lower = {}",
                    self.tau_upper, self.tau_lower
                ),
            ));
        }
        Ok(())
    }

    /// Lifetime of the excited branch a transition starts from.
    pub fn lifetime(&self, t: Transition) -> f64 {
        if t.from_upper_excited() {
            self.tau_upper
        } else {
            self.tau_lower
        }
    }
}

/// Absolute frequencies of the four lines.
///
/// A and B share the upper excited branch, C and D the lower one, and
/// B and D start from the upper ground branch, so that A−B = C−D = Δgs
/// and A−C = B−D = Δes.
pub fn transition_frequencies(fs: &FineStructure) -> PerTransition<f64> {
    let sum = 0.5 * (fs.delta_es + fs.delta_gs);
    let diff = 0.5 * (fs.delta_es - fs.delta_gs);
    PerTransition {
        a: fs.zpl_centroid + sum,
        b: fs.zpl_centroid + diff,
        c: fs.zpl_centroid - diff,
        d: fs.zpl_centroid - sum,
    }
}

/// Lifetime-limited (Fourier-limited) FWHM 1/(2πτ). `tau` in ns, result in GHz.
pub fn lifetime_limited_linewidth(tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain("lifetime must be positive", tau));
    }
    Ok(1.0 / (2.0 * std::f64::consts::PI * tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IsotopeLabel {
    Si28,
    Si29,
    Si30,
}

impl fmt::Display for IsotopeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IsotopeLabel::Si28 => "Si28",
            IsotopeLabel::Si29 => "Si29",
            IsotopeLabel::Si30 => "Si30",
        })
    }
}

/// One silicon-isotope subensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotopeSpecies {
    pub label: IsotopeLabel,
    pub abundance: f64,
    /// ZPL offset relative to the ²⁸Si centroid, GHz.
    pub zpl_offset: f64,
    pub fine_structure: FineStructure,
}

impl IsotopeSpecies {
    pub fn validate(&self) -> Result<()> {
        if !(self.abundance > 0.0 && self.abundance <= 1.0) {
            return Err(Error::invalid(
                format!("isotope {} abundance", self.label),
                format!("{} outside (0, 1]", self.abundance),
            ));
        }
        if !self.zpl_offset.is_finite() {
            return Err(Error::invalid(format!("isotope {} zpl_offset", self.label), "must be finite"));
        }
        self.fine_structure.validate().map_err(|e| match e {
            Error::Invalid { field, reason } => Error::Invalid {
                field: format!("isotope {} {field}", self.label),
                reason,
            },
            other => other,
        })
    }

    /// Line centers of this subensemble including its ZPL offset.
    pub fn line_centers(&self) -> PerTransition<f64> {
        let f = transition_frequencies(&self.fine_structure);
        PerTransition {
            a: f.a + self.zpl_offset,
            b: f.b + self.zpl_offset,
            c: f.c + self.zpl_offset,
            d: f.d + self.zpl_offset,
        }
    }
}

/// Checks a configured isotope set: unique labels, abundances summing to one.
pub fn validate_isotopes(isotopes: &[IsotopeSpecies]) -> Result<()> {
    if isotopes.is_empty() {
        return Err(Error::invalid("isotopes", "at least one isotope required"));
    }
    for (i, iso) in isotopes.iter().enumerate() {
        iso.validate()?;
        if isotopes[..i].iter().any(|o| o.label == iso.label) {
            return Err(Error::invalid("isotopes", format!("duplicate label {}", iso.label)));
        }
    }
    let total: f64 = isotopes.iter().map(|i| i.abundance).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("isotopes", format!("abundances sum to {total}, expected 1")));
    }
    Ok(())
}
