//! Run configuration: a TOML document with the sections `constants`,
//! `ensemble`, `dynamics`, `scan`, `noise`, `strain` and `output`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use siv_core::dynamics::{HoleBurnConfig, LambdaConfig};
use siv_core::ensemble::{natural_isotopes, EnsembleConfig, NoiseModel, ScanGrid, TAU_LOWER, TAU_UPPER};
use siv_core::physics::{
    validate_isotopes, BroadeningLaw, FineStructure, IsotopeLabel, IsotopeSpecies, PerTransition, PhysicalConstants,
    KB_OVER_H, SPEED_OF_LIGHT,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub scan: ScanSection,
    pub noise: Option<NoiseModel>,
    pub strain: Option<StrainSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub kb_over_h: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Natural,
    Si28,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    /// K.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub preset: Preset,
    /// ²⁸Si ZPL centroid, GHz; defaults to c/738 nm.
    pub zpl_centroid: Option<f64>,
    /// Explicit isotope list; replaces the preset when non-empty.
    #[serde(default)]
    pub isotope: Vec<IsotopeEntry>,
    #[serde(default)]
    pub broadening: BroadeningLaw,
    pub amplitude_overrides: Option<PerTransition<f64>>,
    pub gamma_inh_overrides: Option<PerTransition<f64>>,
    #[serde(default = "one")]
    pub detection_efficiency: f64,
}

fn default_temperature() -> f64 {
    5.0
}

fn one() -> f64 {
    1.0
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            temperature: default_temperature(),
            preset: Preset::Natural,
            zpl_centroid: None,
            isotope: Vec::new(),
            broadening: BroadeningLaw::default(),
            amplitude_overrides: None,
            gamma_inh_overrides: None,
            detection_efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopeEntry {
    pub label: IsotopeLabel,
    pub abundance: f64,
    /// GHz relative to the ²⁸Si centroid.
    #[serde(default)]
    pub zpl_offset: f64,
    pub delta_gs: f64,
    pub delta_es: f64,
    #[serde(default = "tau_lower")]
    pub tau_lower: f64,
    #[serde(default = "tau_upper")]
    pub tau_upper: f64,
}

fn tau_lower() -> f64 {
    TAU_LOWER
}

fn tau_upper() -> f64 {
    TAU_UPPER
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub lambda: Option<LambdaConfig>,
    pub holeburn: Option<HoleBurnConfig>,
    pub g2: Option<G2Section>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Section {
    /// GHz.
    pub gamma_total: f64,
    /// GHz.
    #[serde(default)]
    pub pump_rate: f64,
}

/// Scan axis. For `ple` and `sweep`, `from`/`to` are GHz relative to the ZPL
/// centroid; for `cpt` the probe detuning in GHz; for `holeburn` the probe
/// offset from the pump in GHz; for `g2` the delay in ns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: Option<usize>,
    /// Sweep temperatures, K.
    #[serde(default)]
    pub temperatures: Vec<f64>,
    /// Hole-burning pump saturation parameters.
    #[serde(default)]
    pub powers: Vec<f64>,
}

/// Synthetic linewidth-versus-ground-splitting data for the phonon model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrainSection {
    /// K.
    pub temperature: f64,
    /// GHz⁻².
    pub amplitude: f64,
    /// GHz.
    #[serde(default)]
    pub offset: f64,
    /// Ground splittings, GHz.
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
    /// File name stem; defaults to the config file stem.
    pub prefix: Option<String>,
    #[serde(default)]
    pub plot: bool,
}

/// Which simulation a config is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Simulation {
    Ple,
    Sweep,
    Holeburn,
    Cpt,
    G2,
    Strain,
}

/// A config with the file it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub config: RunConfig,
}

pub fn load(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config = parse(&text).map_err(|message| CliError::Config { path: path.to_path_buf(), message })?;
    Ok(Loaded { path: path.to_path_buf(), config })
}

/// Parses config text; errors name the offending key path.
pub fn parse(text: &str) -> Result<RunConfig, String> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path == "." || path.is_empty() {
            msg
        } else {
            format!("at {path}: {msg}")
        }
    })
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form: keys sorted, defaults filled in.
    pub fn digest(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn constants(&self) -> Result<PhysicalConstants, String> {
        let k = self.constants.kb_over_h.unwrap_or(KB_OVER_H);
        let c = self.constants.c.unwrap_or(SPEED_OF_LIGHT);
        PhysicalConstants::new(k, c).map_err(|e| e.to_string())
    }

    pub fn zpl_centroid(&self) -> Result<f64, String> {
        let c0 = match self.ensemble.zpl_centroid {
            Some(v) => v,
            None => self.constants()?.c() / 738.0,
        };
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(format!("ensemble.zpl_centroid: {c0} must be > 0"));
        }
        Ok(c0)
    }

    pub fn ensemble_config(&self) -> Result<EnsembleConfig, String> {
        let e = &self.ensemble;
        let c0 = self.zpl_centroid()?;
        let isotopes = if e.isotope.is_empty() {
            let mut iso = natural_isotopes(c0);
            if e.preset == Preset::Si28 {
                iso.truncate(1);
                iso[0].abundance = 1.0;
            }
            iso
        } else {
            e.isotope
                .iter()
                .map(|i| IsotopeSpecies {
                    label: i.label,
                    abundance: i.abundance,
                    zpl_offset: i.zpl_offset,
                    fine_structure: FineStructure {
                        zpl_centroid: c0,
                        delta_gs: i.delta_gs,
                        delta_es: i.delta_es,
                        tau_lower: i.tau_lower,
                        tau_upper: i.tau_upper,
                    },
                })
                .collect()
        };
        validate_isotopes(&isotopes).map_err(|e| format!("ensemble.isotope: {e}"))?;
        let cfg = EnsembleConfig {
            isotopes,
            broadening: e.broadening,
            temperature: e.temperature,
            amplitude_overrides: e.amplitude_overrides,
            gamma_inh_overrides: e.gamma_inh_overrides,
            detection_efficiency: e.detection_efficiency,
            constants: self.constants()?,
        };
        cfg.validate().map_err(|e| format!("ensemble: {e}"))?;
        Ok(cfg)
    }

    /// The scan axis as (from, to, points).
    pub fn axis(&self) -> Result<(f64, f64, usize), String> {
        let s = &self.scan;
        let (Some(from), Some(to), Some(points)) = (s.from, s.to, s.points) else {
            return Err("scan: from, to and points are required".into());
        };
        ScanGrid::new(from, to, points).map_err(|e| format!("scan: {e}"))?;
        Ok((from, to, points))
    }

    /// PLE grid in absolute GHz.
    pub fn ple_grid(&self) -> Result<ScanGrid, String> {
        let (from, to, points) = self.axis()?;
        let c0 = self.zpl_centroid()?;
        ScanGrid::new(c0 + from, c0 + to, points).map_err(|e| format!("scan: {e}"))
    }

    pub fn noise(&self, seed: Option<u64>) -> Result<Option<NoiseModel>, String> {
        let Some(mut n) = self.noise else {
            return Ok(None);
        };
        if let Some(s) = seed {
            n.seed = s;
        }
        n.validate().map_err(|e| e.to_string())?;
        Ok(Some(n))
    }

    pub fn lambda(&self) -> Result<LambdaConfig, String> {
        let l = self.dynamics.lambda.ok_or("dynamics.lambda: section required")?;
        l.validate().map_err(|e| format!("dynamics.lambda: {e}"))?;
        Ok(l)
    }

    pub fn holeburn(&self) -> Result<HoleBurnConfig, String> {
        let h = self.dynamics.holeburn.ok_or("dynamics.holeburn: section required")?;
        h.validate().map_err(|e| format!("dynamics.holeburn: {e}"))?;
        Ok(h)
    }

    pub fn g2(&self) -> Result<G2Section, String> {
        let g = self.dynamics.g2.ok_or("dynamics.g2: section required")?;
        if !(g.gamma_total > 0.0) || !g.gamma_total.is_finite() {
            return Err(format!("dynamics.g2.gamma_total: {} must be > 0", g.gamma_total));
        }
        if !(g.pump_rate >= 0.0) || !g.pump_rate.is_finite() {
            return Err(format!("dynamics.g2.pump_rate: {} must be >= 0", g.pump_rate));
        }
        Ok(g)
    }

    pub fn strain(&self) -> Result<&StrainSection, String> {
        let s = self.strain.as_ref().ok_or("strain: section required")?;
        if !(s.temperature > 0.0) || !s.temperature.is_finite() {
            return Err(format!("strain.temperature: {} must be > 0", s.temperature));
        }
        if !(s.amplitude > 0.0) || !s.amplitude.is_finite() {
            return Err(format!("strain.amplitude: {} must be > 0", s.amplitude));
        }
        if !s.offset.is_finite() {
            return Err("strain.offset: must be finite".into());
        }
        if s.deltas.is_empty() {
            return Err("strain.deltas: at least one splitting required".into());
        }
        if let Some(d) = s.deltas.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(format!("strain.deltas: {d} must be > 0"));
        }
        Ok(s)
    }

    /// Checks everything `sim` will use, so invalid configs fail before any
    /// computation.
    pub fn validate_for(&self, sim: Simulation, seed: Option<u64>) -> Result<(), String> {
        self.constants()?;
        if let Some(p) = &self.output.prefix {
            if p.is_empty() || p.contains(['/', '\\']) {
                return Err(format!("output.prefix: {p:?} must be a plain file stem"));
            }
        }
        match sim {
            Simulation::Ple => {
                self.ensemble_config()?;
                self.ple_grid()?;
                self.noise(seed)?;
            }
            Simulation::Sweep => {
                self.ensemble_config()?;
                self.ple_grid()?;
                self.noise(seed)?;
                if self.scan.temperatures.is_empty() {
                    return Err("scan.temperatures: at least one temperature required".into());
                }
                if let Some(t) = self.scan.temperatures.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
                    return Err(format!("scan.temperatures: {t} must be > 0"));
                }
            }
            Simulation::Holeburn => {
                self.holeburn()?;
                let (from, to, _) = self.axis()?;
                if from >= to {
                    return Err("scan: from must be < to".into());
                }
                if let Some(s) = self.scan.powers.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
                    return Err(format!("scan.powers: {s} must be >= 0"));
                }
            }
            Simulation::Cpt => {
                self.lambda()?;
                self.axis()?;
            }
            Simulation::G2 => {
                self.g2()?;
                let (from, _, _) = self.axis()?;
                if from < 0.0 {
                    return Err(format!("scan.from: delay {from} must be >= 0"));
                }
            }
            Simulation::Strain => {
                self.strain()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_names_its_path() {
        let e = parse("[ensemble.broadening]\na3 = 1e-4\nbogus = 1\n").unwrap_err();
        assert!(e.contains("ensemble.broadening"), "{e}");
        assert!(e.contains("bogus"), "{e}");
        let e = parse("[dynamics.holeburn]\ngamma_hom = 0.3\ngamma_inh = 1\ns_pump = 1\ns_probe = 0\nnu_pump = 0\nx = 2\n").unwrap_err();
        assert!(e.contains("dynamics.holeburn"), "{e}");
    }

    #[test]
    fn wrong_type_rejected() {
        assert!(parse("[scan]\npoints = \"many\"\n").unwrap_err().contains("scan.points"));
    }

    #[test]
    fn digest_ignores_key_order_and_formatting() {
        let a = parse("[scan]\nfrom = -1.0\nto = 1.0\npoints = 11\n[ensemble]\ntemperature = 5.0\n").unwrap();
        let b = parse("[ensemble]\ntemperature = 5\n\n[scan]\npoints = 11\nto = 1.0 # upper\nfrom = -1.0\n").unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = parse("[scan]\nfrom = -1.0\nto = 1.0\npoints = 12\n").unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn invalid_values_caught_before_running() {
        let cfg = parse("[scan]\nfrom = -1.0\nto = 1.0\npoints = 11\n[ensemble]\ntemperature = -3\n").unwrap();
        let e = cfg.validate_for(Simulation::Ple, None).unwrap_err();
        assert!(e.contains("temperature"), "{e}");
        let cfg = parse("[constants]\nkb_over_h = 30.0\n").unwrap();
        assert!(cfg.validate_for(Simulation::Strain, None).is_err());
        assert!(parse("").unwrap().validate_for(Simulation::Cpt, None).unwrap_err().contains("dynamics.lambda"));
    }

    #[test]
    fn si28_preset_has_one_isotope() {
        let cfg = parse("[ensemble]\npreset = \"si28\"\n").unwrap();
        let e = cfg.ensemble_config().unwrap();
        assert_eq!(e.isotopes.len(), 1);
        assert_eq!(e.isotopes[0].abundance, 1.0);
    }

    #[test]
    fn explicit_isotopes_replace_preset() {
        let text = "[[ensemble.isotope]]\nlabel = \"Si28\"\nabundance = 1.0\ndelta_gs = 50.0\ndelta_es = 250.0\n";
        let e = parse(text).unwrap().ensemble_config().unwrap();
        assert_eq!(e.isotopes.len(), 1);
        assert_eq!(e.isotopes[0].fine_structure.delta_gs, 50.0);
        assert_eq!(e.isotopes[0].fine_structure.tau_lower, TAU_LOWER);
    }
}
