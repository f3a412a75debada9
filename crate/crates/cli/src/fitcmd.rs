//! `fit` subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use siv_core::ensemble::Spectrum;
use siv_core::fit::{
    extrapolate_zero_power, fit_bilorentzian, fit_multi_voigt, fit_phonon_model, fit_temperature_linewidth,
    fit_temperature_shift, fit_voigt, FitOptions, FitResult, ModelKind,
};

use crate::config;
use crate::error::{CliError, CliResult};
use crate::output::write_atomic;
use crate::svg::{self, Plot};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitModel {
    Voigt,
    Multipeak,
    Bilorentzian,
    Power,
    Tpoly,
    Tshift,
    Phonon,
}

impl FitModel {
    /// Input columns for the point-table models.
    pub fn schema(self) -> Option<(&'static str, &'static str)> {
        match self {
            FitModel::Power => Some(("power", "fwhm_ghz")),
            FitModel::Tpoly => Some(("temperature_k", "fwhm_ghz")),
            FitModel::Tshift => Some(("temperature_k", "shift_ghz")),
            FitModel::Phonon => Some(("delta_gs_ghz", "fwhm_ghz")),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub model: FitModel,
    pub input: PathBuf,
    pub out: PathBuf,
    pub init: Vec<(String, f64)>,
    pub fix: Vec<(String, f64)>,
    pub bound: Vec<(String, (f64, f64))>,
    pub exclude: Vec<usize>,
    pub peaks: usize,
    pub terms: Vec<u32>,
    pub temperature: Option<f64>,
    pub config: Option<PathBuf>,
    pub with_offset: bool,
    pub plot: bool,
}

/// `name=value`.
pub fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("'{s}' is not name=value"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// `name=lo,hi`.
pub fn parse_bound(s: &str) -> Result<(String, (f64, f64)), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("'{s}' is not name=lo,hi"))?;
    let (lo, hi) = v.split_once(',').ok_or_else(|| format!("'{v}' is not lo,hi"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
    Ok((k.trim().to_string(), (p(lo)?, p(hi)?)))
}

fn input_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Input { path: path.to_path_buf(), message: message.into() }
}

fn read_spectrum(path: &Path) -> CliResult<Spectrum> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let r = if is_json { Spectrum::from_json(&text) } else { Spectrum::from_csv(&text) };
    r.map_err(|e| input_err(path, e.to_string()))
}

fn options(args: &FitArgs, sigma: Option<Vec<f64>>) -> FitOptions {
    FitOptions {
        init: args.init.iter().cloned().collect::<BTreeMap<_, _>>(),
        fixed: args.fix.iter().cloned().collect(),
        bounds: args.bound.iter().cloned().collect(),
        exclude: args.exclude.clone(),
        sigma,
        ..FitOptions::default()
    }
}

fn phonon_temperature(args: &FitArgs) -> CliResult<f64> {
    if let Some(t) = args.temperature {
        return Ok(t);
    }
    if let Some(p) = &args.config {
        let loaded = config::load(p)?;
        let s = loaded.config.strain().map_err(|message| CliError::Config { path: p.clone(), message })?;
        return Ok(s.temperature);
    }
    Err(CliError::Usage("fit phonon needs --temperature or --config with a [strain] section".into()))
}

/// Runs the fit and writes the result JSON (and SVG with `plot`). The
/// result is written even when the fit did not converge.
pub fn fit(args: &FitArgs) -> CliResult<FitResult> {
    let core = |e: siv_core::Error| CliError::from_core(&args.input, "fit", e);
    let (result, data, kind) = match args.model.schema() {
        None => {
            let s = read_spectrum(&args.input)?;
            let o = options(args, None);
            let (r, kind) = match args.model {
                FitModel::Voigt => (fit_voigt(&s, &o), ModelKind::Voigt),
                FitModel::Multipeak => (fit_multi_voigt(&s, args.peaks, &o), ModelKind::MultiVoigt { n: args.peaks }),
                _ => (fit_bilorentzian(&s, &o), ModelKind::BiLorentzian),
            };
            (r.map_err(core)?, (s.frequencies().to_vec(), s.intensities().to_vec()), kind)
        }
        Some((xn, yn)) => {
            let text = std::fs::read_to_string(&args.input).map_err(|e| CliError::io(&args.input, e))?;
            let t = Table::from_csv(&text, xn, yn).map_err(|m| input_err(&args.input, m))?;
            let o = options(args, t.sigma.clone());
            let pts = t.points();
            let (r, kind) = match args.model {
                FitModel::Power => {
                    let r = extrapolate_zero_power(&pts, &o).map_err(core)?;
                    let kind = if r.has_flag("linear_fallback") { ModelKind::PowerLinear } else { ModelKind::PowerBroadening };
                    (r, kind)
                }
                FitModel::Tpoly => (
                    fit_temperature_linewidth(&pts, &args.terms, &o).map_err(core)?,
                    ModelKind::TPoly { terms: args.terms.clone() },
                ),
                FitModel::Tshift => (fit_temperature_shift(&pts, &o).map_err(core)?, ModelKind::TShift),
                _ => {
                    let temperature = phonon_temperature(args)?;
                    (
                        fit_phonon_model(&pts, temperature, args.with_offset, &o).map_err(core)?,
                        ModelKind::PhononStrain { temperature, with_offset: args.with_offset },
                    )
                }
            };
            (r, (t.x, t.y), kind)
        }
    };
    write_atomic(&args.out, &result.to_json())?;
    if args.plot {
        let svg = overlay_svg(args, &result, &kind, data)?;
        write_atomic(&args.out.with_extension("svg"), &svg)?;
    }
    Ok(result)
}

fn overlay_svg(args: &FitArgs, r: &FitResult, kind: &ModelKind, (x, y): (Vec<f64>, Vec<f64>)) -> CliResult<String> {
    let names: Vec<&str> = r.order.iter().map(String::as_str).collect();
    let p = r.values(&names);
    let f = kind.evaluator();
    let curve_x: Vec<f64> = if args.model.schema().is_none() {
        x.clone()
    } else {
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..200).map(|i| lo + (hi - lo) * i as f64 / 199.0).collect()
    };
    let curve_y: Vec<f64> = curve_x.iter().map(|&v| f(v, &p)).collect();
    let (xl, yl) = match args.model.schema() {
        None => ("Frequency (GHz)".to_string(), "Intensity (arb. units)".to_string()),
        Some((a, b)) => (axis_label(a), axis_label(b)),
    };
    let plot = Plot {
        title: format!("{} fit, chi2/dof = {:.4e}", r.model, r.chi2_per_dof),
        x_label: xl,
        y_label: yl,
        x,
        y,
        overlay: Some((curve_x, curve_y)),
    };
    svg::render(&plot).map_err(|m| input_err(&args.input, format!("plot: {m}")))
}

fn axis_label(col: &str) -> String {
    match col {
        "temperature_k" => "Temperature (K)".into(),
        "fwhm_ghz" => "FWHM (GHz)".into(),
        "shift_ghz" => "Line shift (GHz)".into(),
        "delta_gs_ghz" => "Ground splitting (GHz)".into(),
        "power" => "Excitation power".into(),
        other => other.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("a3=2.5e-4").unwrap(), ("a3".into(), 2.5e-4));
        assert!(parse_assignment("a3").is_err());
        assert!(parse_assignment("a3=x").is_err());
        assert_eq!(parse_bound("center=-3,5").unwrap(), ("center".into(), (-3.0, 5.0)));
        assert!(parse_bound("center=-3").is_err());
    }
}
