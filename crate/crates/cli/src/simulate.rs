//! `simulate` subcommands.

use std::path::{Path, PathBuf};

use serde::Serialize;
use siv_core::dynamics::{cpt_contrast, cpt_scan, g2_half_delay, g2_two_level, holeburn_scan, HoleBurnConfig};
use siv_core::ensemble::{add_noise, format_number, synthesize_ple, temperature_sweep, Spectrum};
use siv_core::fit::{extrapolate_zero_power, fit_bilorentzian, FitOptions, FitResult};
use siv_core::physics::{phonon_linewidth, phonon_peak_splitting};

use crate::config::{self, Format, Loaded, Simulation};
use crate::error::{CliError, CliResult};
use crate::output::{Emitter, RunReport};
use crate::svg::{self, Plot};
use crate::table::Table;

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub what: Simulation,
    pub config: PathBuf,
    pub out: PathBuf,
    pub format: Option<Format>,
    pub plot: bool,
    pub seed: Option<u64>,
}

struct Ctx<'a> {
    loaded: &'a Loaded,
    format: Format,
    plot: bool,
    prefix: String,
    emit: Emitter,
}

impl Ctx<'_> {
    fn path(&self) -> &Path {
        &self.loaded.path
    }

    fn core<T>(&self, stage: &str, r: siv_core::Result<T>) -> CliResult<T> {
        r.map_err(|e| CliError::from_core(self.path(), stage, e))
    }

    fn ext(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    fn spectrum(&mut self, stem: &str, s: &Spectrum, labels: (&str, &str)) -> CliResult<()> {
        let body = match self.format {
            Format::Csv => s.to_csv(),
            Format::Json => s.to_json(),
        };
        for w in s.warnings() {
            self.emit.warn(format!("{stem}: {w}"));
        }
        self.emit.write(&format!("{stem}.{}", self.ext()), &body)?;
        if self.plot {
            let plot = Plot {
                title: title(s.meta()),
                x_label: labels.0.into(),
                y_label: labels.1.into(),
                x: s.frequencies().to_vec(),
                y: s.intensities().to_vec(),
                overlay: None,
            };
            self.svg(stem, &plot)?;
        }
        Ok(())
    }

    fn table(&mut self, stem: &str, t: &Table, title: &str, labels: (&str, &str)) -> CliResult<()> {
        let body = match self.format {
            Format::Csv => t.to_csv(),
            Format::Json => t.to_json(),
        };
        self.emit.write(&format!("{stem}.{}", self.ext()), &body)?;
        if self.plot {
            let plot = Plot {
                title: title.into(),
                x_label: labels.0.into(),
                y_label: labels.1.into(),
                x: t.x.clone(),
                y: t.y.clone(),
                overlay: None,
            };
            self.svg(stem, &plot)?;
        }
        Ok(())
    }

    fn svg(&mut self, stem: &str, plot: &Plot) -> CliResult<()> {
        let text = svg::render(plot).map_err(|m| CliError::Input { path: self.path().to_path_buf(), message: format!("plot {stem}: {m}") })?;
        self.emit.write(&format!("{stem}.svg"), &text)?;
        Ok(())
    }
}

/// Title from spectrum metadata: kind plus the main parameters.
fn title(meta: &std::collections::BTreeMap<String, String>) -> String {
    let kind = meta.get("kind").map(String::as_str).unwrap_or("spectrum");
    let mut parts = vec![kind.to_uppercase()];
    for (key, label, unit) in [
        ("temperature_k", "T", " K"),
        ("s_pump", "s_pump", ""),
        ("gamma_gs_ghz", "gamma_gs", " GHz"),
        ("noise", "noise", ""),
    ] {
        if let Some(v) = meta.get(key) {
            parts.push(format!("{label} = {v}{unit}"));
        }
    }
    parts.join(", ")
}

pub fn simulate(args: &SimulateArgs) -> CliResult<RunReport> {
    let loaded = config::load(&args.config)?;
    let cfg = &loaded.config;
    cfg.validate_for(args.what, args.seed)
        .map_err(|message| CliError::Config { path: loaded.path.clone(), message })?;
    let prefix = match &cfg.output.prefix {
        Some(p) => p.clone(),
        None => loaded.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into()),
    };
    let mut ctx = Ctx {
        loaded: &loaded,
        format: args.format.unwrap_or(cfg.output.format),
        plot: args.plot || cfg.output.plot,
        prefix,
        emit: Emitter::new(&args.out),
    };
    let name = match args.what {
        Simulation::Ple => {
            ple(&mut ctx, args.seed)?;
            "ple"
        }
        Simulation::Sweep => {
            sweep(&mut ctx, args.seed)?;
            "sweep"
        }
        Simulation::Holeburn => {
            holeburn(&mut ctx)?;
            "holeburn"
        }
        Simulation::Cpt => {
            cpt(&mut ctx)?;
            "cpt"
        }
        Simulation::G2 => {
            g2(&mut ctx)?;
            "g2"
        }
        Simulation::Strain => {
            strain(&mut ctx)?;
            "strain"
        }
    };
    // a seed override digests like the same seed written in the file
    let digest = match args.seed {
        Some(seed) if cfg.noise.is_some() => {
            let mut c = cfg.clone();
            c.noise.as_mut().expect("checked").seed = seed;
            c.digest()
        }
        _ => cfg.digest(),
    };
    ctx.emit.finish(&format!("simulate {name}"), &loaded.path, digest)
}

fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| if i + 1 == points { to } else { from + (to - from) * i as f64 / (points - 1) as f64 })
        .collect()
}

const PLE_LABELS: (&str, &str) = ("Frequency (GHz)", "PLE intensity (arb. units)");

fn ple(ctx: &mut Ctx, seed: Option<u64>) -> CliResult<()> {
    let cfg = &ctx.loaded.config;
    let ens = cfg.ensemble_config().expect("validated");
    let grid = cfg.ple_grid().expect("validated");
    let noise = cfg.noise(seed).expect("validated");
    let mut s = ctx.core("ple synthesis", synthesize_ple(&ens, &grid))?;
    if let Some(n) = noise {
        s = ctx.core("noise", add_noise(&s, &n))?;
    }
    let stem = ctx.prefix.clone();
    ctx.spectrum(&stem, &s, PLE_LABELS)
}

fn sweep(ctx: &mut Ctx, seed: Option<u64>) -> CliResult<()> {
    let cfg = &ctx.loaded.config;
    let ens = cfg.ensemble_config().expect("validated");
    let grid = cfg.ple_grid().expect("validated");
    let noise = cfg.noise(seed).expect("validated");
    let temps = cfg.scan.temperatures.clone();
    let spectra = ctx.core("temperature sweep", temperature_sweep(&ens, &grid, &temps))?;
    for (i, (t, mut s)) in temps.iter().zip(spectra).enumerate() {
        if let Some(mut n) = noise {
            // one noise stream family per temperature
            n.seed = n.seed.wrapping_add(i as u64);
            s = ctx.core("noise", add_noise(&s, &n))?;
        }
        let stem = format!("{}_{}K", ctx.prefix, format_number(*t));
        ctx.spectrum(&stem, &s, PLE_LABELS)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HoleSeries {
    gamma_hom_ghz: f64,
    points: Vec<HoleSeriesPoint>,
    extrapolation: Option<FitResult>,
}

#[derive(Serialize)]
struct HoleSeriesPoint {
    s_pump: f64,
    file: String,
    hole_fwhm_ghz: f64,
    hole_fwhm_sigma_ghz: Option<f64>,
    hole_fwhm_half_ghz: f64,
    flags: Vec<String>,
}

fn holeburn(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = &ctx.loaded.config;
    let base = cfg.holeburn().expect("validated");
    let (from, to, points) = cfg.axis().expect("validated");
    let probes: Vec<f64> = linspace(from, to, points).into_iter().map(|d| base.nu_pump + d).collect();
    let powers = if cfg.scan.powers.is_empty() { vec![base.s_pump] } else { cfg.scan.powers.clone() };
    let labels = ("Probe frequency (GHz)", "Excited fraction");
    if powers.len() == 1 {
        let s = ctx.core("hole burning", holeburn_scan(&HoleBurnConfig { s_pump: powers[0], ..base }, &probes))?;
        let stem = ctx.prefix.clone();
        return ctx.spectrum(&stem, &s, labels);
    }
    let mut series = Vec::new();
    for &s_pump in &powers {
        let s = ctx.core("hole burning", holeburn_scan(&HoleBurnConfig { s_pump, ..base }, &probes))?;
        let stem = format!("{}_s{}", ctx.prefix, format_number(s_pump));
        ctx.spectrum(&stem, &s, labels)?;
        if s_pump > 0.0 {
            let fit = ctx.core("hole fit", fit_bilorentzian(&s, &FitOptions::default()))?;
            if !fit.converged {
                ctx.emit.warn(format!("{stem}: hole fit did not converge"));
            }
            series.push(HoleSeriesPoint {
                s_pump,
                file: format!("{stem}.{}", ctx.ext()),
                hole_fwhm_ghz: fit.value("hole_fwhm"),
                hole_fwhm_sigma_ghz: fit.sigma("hole_fwhm"),
                hole_fwhm_half_ghz: fit.derived["hole_fwhm_half"].value,
                flags: fit.flags.clone(),
            });
        }
    }
    let extrapolation = if series.len() >= 3 {
        let pts: Vec<(f64, f64)> = series.iter().map(|p| (p.s_pump, p.hole_fwhm_ghz)).collect();
        Some(ctx.core("zero-power extrapolation", extrapolate_zero_power(&pts, &FitOptions::default()))?)
    } else {
        None
    };
    let summary = HoleSeries { gamma_hom_ghz: base.gamma_hom, points: series, extrapolation };
    let mut text = serde_json::to_string_pretty(&summary).expect("series serializes");
    text.push('\n');
    ctx.emit.write(&format!("{}_series.json", ctx.prefix), &text)?;
    Ok(())
}

fn cpt(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = &ctx.loaded.config;
    let l = cfg.lambda().expect("validated");
    let (from, to, points) = cfg.axis().expect("validated");
    let mut s = ctx.core("cpt scan", cpt_scan(&l, &linspace(from, to, points)))?;
    if (from..=to).contains(&l.detuning_pump) {
        let c = ctx.core("cpt contrast", cpt_contrast(&s, l.detuning_pump))?;
        s.set_meta("contrast", format_number(c));
    }
    let stem = ctx.prefix.clone();
    ctx.spectrum(&stem, &s, ("Probe detuning (GHz)", "Excited population"))
}

fn g2(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = &ctx.loaded.config;
    let g = cfg.g2().expect("validated");
    let (from, to, points) = cfg.axis().expect("validated");
    let taus = linspace(from, to, points);
    let v = ctx.core("g2", g2_two_level(&taus, g.gamma_total, g.pump_rate))?;
    let mut t = Table::new("tau_ns", "g2", taus, v);
    t.meta("kind", "g2");
    t.meta("gamma_total_ghz", format_number(g.gamma_total));
    t.meta("pump_rate_ghz", format_number(g.pump_rate));
    t.meta("half_delay_ns", format_number(g2_half_delay(g.gamma_total, g.pump_rate)));
    let stem = ctx.prefix.clone();
    ctx.table(&stem, &t, "G2", ("Delay (ns)", "g2"))
}

fn strain(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = &ctx.loaded.config;
    let st = cfg.strain().expect("validated").clone();
    let k = cfg.constants().expect("validated");
    let mut deltas = st.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let widths = deltas
        .iter()
        .map(|&d| phonon_linewidth(d, st.temperature, st.amplitude, &k).map(|w| w + st.offset))
        .collect::<siv_core::Result<Vec<f64>>>();
    let widths = ctx.core("phonon model", widths)?;
    let mut t = Table::new("delta_gs_ghz", "fwhm_ghz", deltas, widths);
    t.meta("kind", "strain");
    t.meta("temperature_k", format_number(st.temperature));
    t.meta("amplitude", format_number(st.amplitude));
    t.meta("offset_ghz", format_number(st.offset));
    t.meta("peak_delta_ghz", format_number(phonon_peak_splitting(st.temperature, &k)));
    let stem = ctx.prefix.clone();
    let title = format!("STRAIN, T = {} K", format_number(st.temperature));
    ctx.table(&stem, &t, &title, ("Ground splitting (GHz)", "Linewidth (GHz)"))
}
