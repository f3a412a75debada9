//! Frequency grids and the spectrum exchange type with its CSV and JSON
//! encodings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "frequency_ghz,intensity";

/// A uniform frequency grid, GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl ScanGrid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self> {
        let g = Self { start, stop, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::invalid("scan", "start and stop must be finite"));
        }
        if !(self.stop > self.start) {
            return Err(Error::invalid(
                "scan.stop",
                format!("{} must exceed start = {}", self.stop, self.start),
            ));
        }
        if self.points < 2 {
            return Err(Error::invalid("scan.points", format!("{} must be >= 2", self.points)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }

    /// Grid point `i`; the last point is exactly `stop`.
    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.stop
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.at(i)).collect()
    }
}

/// Sampled intensities on a strictly increasing frequency axis, with
/// free-form provenance strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum", into = "RawSpectrum")]
pub struct Spectrum {
    frequencies: Vec<f64>,
    intensities: Vec<f64>,
    meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    frequency_ghz: Vec<f64>,
    intensity: Vec<f64>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;
    fn try_from(r: RawSpectrum) -> Result<Self> {
        Spectrum::with_meta(r.frequency_ghz, r.intensity, r.meta)
    }
}

impl From<Spectrum> for RawSpectrum {
    fn from(s: Spectrum) -> Self {
        RawSpectrum {
            frequency_ghz: s.frequencies,
            intensity: s.intensities,
            meta: s.meta,
        }
    }
}

impl Spectrum {
    pub fn new(frequencies: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        Self::with_meta(frequencies, intensities, BTreeMap::new())
    }

    pub fn with_meta(
        frequencies: Vec<f64>,
        intensities: Vec<f64>,
        meta: BTreeMap<String, String>,
    ) -> Result<Self> {
        if frequencies.len() != intensities.len() {
            return Err(Error::Input(format!(
                "{} frequencies but {} intensities",
                frequencies.len(),
                intensities.len()
            )));
        }
        if let Some(i) = frequencies.iter().position(|f| !f.is_finite()) {
            return Err(Error::Input(format!("frequency at row {i} is not finite")));
        }
        if let Some(i) = frequencies.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Input(format!(
                "frequencies must be strictly increasing (rows {} and {})",
                i,
                i + 1
            )));
        }
        if let Some(i) = intensities.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Input(format!(
                "intensity at row {i} is {} (must be finite and >= 0)",
                intensities[i]
            )));
        }
        Ok(Self { frequencies, intensities, meta })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Linear interpolation at `f`, which must lie on the axis span.
    pub fn value_at(&self, f: f64) -> Result<f64> {
        let x = &self.frequencies;
        if x.is_empty() || !(f >= x[0] && f <= x[x.len() - 1]) {
            return Err(Error::domain("frequency outside spectrum", f));
        }
        if x.len() == 1 {
            return Ok(self.intensities[0]);
        }
        let i = x.partition_point(|&v| v <= f).clamp(1, x.len() - 1) - 1;
        let t = (f - x[i]) / (x[i + 1] - x[i]);
        Ok(self.intensities[i] + t * (self.intensities[i + 1] - self.intensities[i]))
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    /// Appends to the `warnings` entry (semicolon separated).
    pub fn add_warning(&mut self, w: &str) {
        let entry = self.meta.entry("warnings".to_string()).or_default();
        if !entry.is_empty() {
            entry.push(';');
        }
        entry.push_str(w);
    }

    pub fn warnings(&self) -> Vec<&str> {
        self.meta
            .get("warnings")
            .map(|w| w.split(';').filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    /// Same axis and metadata, new intensities.
    pub(crate) fn replace_intensities(&self, intensities: Vec<f64>) -> Self {
        debug_assert_eq!(intensities.len(), self.intensities.len());
        Self {
            frequencies: self.frequencies.clone(),
            intensities,
            meta: self.meta.clone(),
        }
    }

    /// Two-column CSV, LF endings, shortest round-trip number formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (f, v) in self.frequencies.iter().zip(&self.intensities) {
            let _ = writeln!(out, "{},{}", format_number(*f), format_number(*v));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Input("empty CSV input".into()))?;
        let header = header.trim().trim_start_matches('\u{feff}');
        if header != CSV_HEADER {
            return Err(Error::Input(format!(
                "CSV header is '{header}', expected '{CSV_HEADER}'"
            )));
        }
        let mut freqs = Vec::new();
        let mut vals = Vec::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 2 {
                return Err(Error::Input(format!(
                    "line {}: expected 2 columns, found {}",
                    n + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str, col: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("line {}: column {col}: cannot parse '{s}'", n + 1)))
            };
            freqs.push(parse(fields[0], "frequency_ghz")?);
            vals.push(parse(fields[1], "intensity")?);
        }
        Self::new(freqs, vals)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spectrum serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("spectrum JSON: {e}")))
    }
}

/// Shortest decimal that parses back to the same `f64` (never locale
/// dependent).
pub fn format_number(v: f64) -> String {
    serde_json::to_string(&v).expect("finite floats serialize")
}
