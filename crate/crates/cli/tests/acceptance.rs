//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;
use siv_core::dynamics::{cpt_contrast, cpt_scan, hole_power_series, steady_state_lambda, LambdaConfig};
use siv_core::ensemble::{baseline_corrected_area, find_peaks, has_local_minimum, temperature_sweep, ScanGrid, Spectrum};
use siv_core::fit::{fit_model, FitOptions, FitResult, ModelKind, ModelSpec};
use siv_core::physics::{
    homogeneous_width, lifetime_limited_linewidth, phonon_linewidth, voigt, IsotopeLabel, PhysicalConstants, Transition,
};
use siv_cli::config;

type Outcome = Result<String, String>;

const BIN: &str = env!("CARGO_BIN_EXE_sivspec");

fn cfg_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn sivspec(args: &[&str], threads: Option<usize>) -> Result<f64, String> {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    let t0 = Instant::now();
    let out = cmd.output().map_err(|e| format!("spawn: {e}"))?;
    let dt = t0.elapsed().as_secs_f64();
    if !out.status.success() {
        return Err(format!("sivspec {args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(dt)
}

fn read(p: &Path) -> Result<String, String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn json(p: &Path) -> Result<Value, String> {
    serde_json::from_str(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ple_table1(dir: &Path) -> Result<(Spectrum, f64), String> {
    let dt = sivspec(&["simulate", "ple", "--config", cfg_path("table1.cfg").to_str().unwrap(), "--out", dir.to_str().unwrap()], None)?;
    let s = Spectrum::from_csv(&read(&dir.join("table1.csv"))?).map_err(|e| e.to_string())?;
    Ok((s, dt))
}

fn splittings() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (s, dt) = ple_table1(dir.path())?;
    let max = s.intensities().iter().cloned().fold(0.0, f64::max);
    let mut peaks = find_peaks(&s, 0.1 * max).map_err(|e| e.to_string())?;
    ensure(peaks.len() >= 4, || format!("only {} peaks", peaks.len()))?;
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height));
    let mut p: Vec<f64> = peaks[..4].iter().map(|k| k.position).collect();
    p.sort_by(f64::total_cmp);
    let gs = [p[1] - p[0], p[3] - p[2]];
    let es = [p[2] - p[0], p[3] - p[1]];
    let err = gs.iter().map(|d| (d - 48.1).abs()).chain(es.iter().map(|d| (d - 256.6).abs())).fold(0.0, f64::max);
    ensure(err <= 0.05, || format!("splittings {gs:?} / {es:?}"))?;
    ensure(dt < 5.0, || format!("runtime {dt:.2} s"))?;
    Ok(format!("ground {:.3}/{:.3}, excited {:.3}/{:.3} GHz, max error {err:.4} GHz, {dt:.2} s", gs[0], gs[1], es[0], es[1]))
}

fn isotope_ratios() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (s, _) = ple_table1(dir.path())?;
    let loaded = config::load(&cfg_path("table1.cfg")).map_err(|e| e.to_string())?;
    let lines = loaded.config.ensemble_config()?.lines().map_err(|e| e.to_string())?;
    let area = |label: IsotopeLabel| {
        let c = lines.iter().find(|l| l.isotope == label && l.transition == Transition::C).unwrap().center;
        baseline_corrected_area(&s, (c - 10.0, c + 10.0)).unwrap()
    };
    let a = [IsotopeLabel::Si28, IsotopeLabel::Si29, IsotopeLabel::Si30].map(area);
    let total: f64 = a.iter().sum();
    let want = [92.2, 4.7, 3.1];
    let got = a.map(|v| 100.0 * v / total);
    let worst = (0..3).map(|i| rel(got[i], want[i])).fold(0.0, f64::max);
    ensure(worst <= 0.01, || format!("ratios {got:?}"))?;
    Ok(format!("{:.2}:{:.2}:{:.2}, worst relative error {:.2}%", got[0], got[1], got[2], 100.0 * worst))
}

fn lifetime_width() -> Outcome {
    let w = lifetime_limited_linewidth(1.6).map_err(|e| e.to_string())? * 1e3;
    ensure((w - 99.5).abs() <= 0.1, || format!("{w} MHz"))?;
    Ok(format!("{w:.3} MHz at 1.6 ns"))
}

fn hole_extrapolation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = cfg_path("fig5_hole.cfg");
    let dt = sivspec(&["simulate", "holeburn", "--config", cfgp.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None)?;
    let series = json(&dir.path().join("fig5_hole_series.json"))?;
    let g0_half = series["extrapolation"]["derived"]["gamma0_half"]["value"].as_f64().ok_or("no gamma0_half")?;
    ensure(rel(g0_half, 0.279) <= 0.05, || format!("zero-power FWHM/2 {g0_half} GHz"))?;
    ensure(dt < 60.0, || format!("runtime {dt:.1} s"))?;

    // Pump saturation giving FWHM/2 = 0.346 GHz, by bisection on fresh fits.
    let base = config::load(&cfgp).map_err(|e| e.to_string())?.config.holeburn()?;
    let half_at = |s_pump: f64| -> Result<f64, String> {
        let p = hole_power_series(&base, &[s_pump], 3.0, 241).map_err(|e| e.to_string())?;
        Ok(p[0].hole_fwhm / 2.0)
    };
    let (mut lo, mut hi) = (0.05, 1.6);
    ensure(half_at(lo)? < 0.346 && half_at(hi)? > 0.346, || "0.346 GHz not bracketed".into())?;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if half_at(mid)? < 0.346 { lo = mid } else { hi = mid }
    }
    let s_star = 0.5 * (lo + hi);
    let at_star = half_at(s_star)?;
    ensure(rel(at_star, 0.346) <= 0.05, || format!("FWHM/2 {at_star} at s = {s_star}"))?;
    let ladder = series["points"].as_array().ok_or("no points")?;
    let listed = ladder
        .iter()
        .min_by(|a, b| {
            let d = |v: &Value| (v["s_pump"].as_f64().unwrap() - s_star).abs();
            d(a).total_cmp(&d(b))
        })
        .ok_or("empty ladder")?;
    let listed_half = listed["hole_fwhm_half_ghz"].as_f64().ok_or("no hole_fwhm_half_ghz")?;
    ensure(rel(listed_half, 0.346) <= 0.05, || format!("ladder point FWHM/2 {listed_half}"))?;
    Ok(format!(
        "zero-power FWHM/2 {:.1} MHz, 0.346 GHz at s_pump = {s_star:.3} (ladder s = {} gives {:.4} GHz), {dt:.1} s",
        1e3 * g0_half,
        listed["s_pump"],
        listed_half
    ))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) { b = d } else { a = c }
    }
    0.5 * (a + b)
}

fn phonon_peak() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = cfg_path("fig8_strain.cfg");
    let d = dir.path();
    sivspec(&["simulate", "strain", "--config", cfgp.to_str().unwrap(), "--out", d.to_str().unwrap()], None)?;
    let out = d.join("phonon.json");
    sivspec(
        &["fit", "phonon", "--in", d.join("fig8_strain.csv").to_str().unwrap(), "--out", out.to_str().unwrap(), "--config", cfgp.to_str().unwrap()],
        None,
    )?;
    let r = json(&out)?;
    let a = r["params"]["amplitude"]["value"].as_f64().ok_or("no amplitude")?;
    ensure(rel(a, 3.6e-8) <= 1e-5, || format!("amplitude {a}"))?;
    let k = PhysicalConstants::default();
    let t = 4.7;
    let peak = golden_max(|x| phonon_linewidth(x, t, a, &k).unwrap(), 10.0, 1000.0);
    let want = 2.8214 * k.kb_over_h() * t;
    ensure(rel(peak, want) <= 0.005, || format!("peak {peak} vs {want}"))?;
    ensure(rel(peak, 275.0) <= 0.01, || format!("peak {peak} not near 275 GHz"))?;
    Ok(format!("A = {a:.6e} GHz^-2, peak at {peak:.2} GHz (2.8214 kB T/h = {want:.2} GHz)"))
}

fn cpt_dip() -> Outcome {
    let l: LambdaConfig = config::load(&cfg_path("cpt.cfg")).map_err(|e| e.to_string())?.config.lambda()?;
    let probe: Vec<f64> = (0..201).map(|i| -0.5 + 0.005 * i as f64).collect();
    let contrast = |cfg: &LambdaConfig| -> Result<f64, String> {
        let s = cpt_scan(cfg, &probe).map_err(|e| e.to_string())?;
        for &p in &probe {
            steady_state_lambda(&LambdaConfig { detuning_probe: p, ..*cfg })
                .and_then(|rho| rho.check(1e-10))
                .map_err(|e| format!("steady state at {p}: {e}"))?;
        }
        cpt_contrast(&s, cfg.detuning_pump).map_err(|e| e.to_string())
    };
    let coherent = contrast(&l)?;
    let washed = contrast(&LambdaConfig { gamma_gs: 10.0 * l.gamma_e, ..l })?;
    ensure(coherent >= 0.99, || format!("contrast {coherent} with gamma_gs = 0"))?;
    ensure(washed <= 0.05, || format!("contrast {washed} with gamma_gs = 10 gamma_e"))?;
    Ok(format!("contrast {coherent:.5} (gamma_gs = 0), {washed:.4} (gamma_gs = 10 gamma_e), trace/hermiticity/residual within 1e-10"))
}

fn model_selection() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let law = config::load(&cfg_path("table1.cfg")).map_err(|e| e.to_string())?.config.ensemble.broadening;
    let gamma0 = lifetime_limited_linewidth(1.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut csv = String::from("temperature_k,fwhm_ghz\n");
    for i in 1..=26 {
        let t = 5.0 * i as f64;
        let w = (gamma0 + homogeneous_width(t, &law).unwrap()) * (1.0 + noise.sample(&mut rng));
        csv.push_str(&format!("{t},{w}\n"));
    }
    let input = d.join("widths.csv");
    std::fs::write(&input, csv).unwrap();
    let fit = |terms: &str| -> Result<Value, String> {
        let out = d.join(format!("tpoly_{}.json", terms.replace(',', "_")));
        sivspec(&["fit", "tpoly", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "--terms", terms], None)?;
        json(&out)
    };
    let chi = |v: &Value| v["chi2_per_dof"].as_f64().unwrap();
    let (c3, c5, c7) = (chi(&fit("3")?), chi(&fit("5")?), chi(&fit("7")?));
    ensure(c5 >= 10.0 * c3 && c7 >= 10.0 * c3, || format!("chi2/dof T3 {c3:.3e}, T5 {c5:.3e}, T7 {c7:.3e}"))?;
    let full = fit("3,5,7")?;
    let p = |n: &str| full["params"][n]["value"].as_f64().unwrap();
    let t = 130.0f64;
    let (k3, k5, k7) = (p("a3") * t.powi(3), p("a5") * t.powi(5), p("a7") * t.powi(7));
    ensure(k3.abs() > 10.0 * (k5.abs() + k7.abs()), || format!("contributions at 130 K: {k3:.3} / {k5:.3} / {k7:.3} GHz"))?;
    Ok(format!(
        "chi2/dof T3 {c3:.3e}, T5 {c5:.3e} ({:.0}x), T7 {c7:.3e} ({:.0}x); full fit at 130 K: T3 {k3:.2}, T5 {k5:.3}, T7 {k7:.3} GHz",
        c5 / c3,
        c7 / c3
    ))
}

fn merging() -> Outcome {
    let cfg = config::load(&cfg_path("table1.cfg")).map_err(|e| e.to_string())?;
    let ens = cfg.config.ensemble_config()?;
    let grid: ScanGrid = cfg.config.ple_grid()?;
    let temps = [5.0, 60.0, 70.0, 130.0];
    let spectra = temperature_sweep(&ens, &grid, &temps).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for (&t, s) in temps.iter().zip(&spectra) {
        let mut at = ens.clone();
        at.temperature = t;
        let lines = at.lines().map_err(|e| e.to_string())?;
        let c = |tr: Transition| lines.iter().find(|l| l.isotope == IsotopeLabel::Si28 && l.transition == tr).unwrap().center;
        let (a, b, cc, dd) = (c(Transition::A), c(Transition::B), c(Transition::C), c(Transition::D));
        seen.push([has_local_minimum(s, b, a), has_local_minimum(s, cc, b), has_local_minimum(s, dd, cc)]);
    }
    let want = [[true; 3], [true; 3], [false, true, false], [false; 3]];
    ensure(seen == want, || format!("resolved (A-B, B-C, C-D) at {temps:?}: {seen:?}"))?;
    Ok("4 lines at 5 K and 60 K, 2 at 70 K, 1 at 130 K".into())
}

struct Case {
    kind: ModelKind,
    x: Vec<f64>,
    /// (value, floor) in fit order; the 1e-5 tolerance is relative to
    /// max(|value|, floor).
    draw: fn(&mut ChaCha8Rng) -> Vec<(f64, f64)>,
    data: fn(f64, &[f64]) -> f64,
}

fn lin(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn lor(x: f64, c: f64, w: f64) -> f64 {
    let d = 2.0 * (x - c) / w;
    1.0 / (1.0 + d * d)
}

fn cases() -> Vec<Case> {
    let temps: Vec<f64> = (1..=26).map(|i| 5.0 * i as f64).collect();
    vec![
        Case {
            kind: ModelKind::Voigt,
            x: lin(-60.0, 60.0, 481),
            draw: |r| {
                let amp = r.gen_range(0.1..100.0);
                vec![(r.gen_range(-5.0..5.0), 1.0), (r.gen_range(0.5..5.0), 0.0), (r.gen_range(2.0..12.0), 0.0), (amp, 0.0), (amp * r.gen_range(0.0..0.1), amp)]
            },
            data: |x, p| p[3] * voigt(x, p[0], p[1], p[2]).unwrap() + p[4],
        },
        Case {
            kind: ModelKind::MultiVoigt { n: 2 },
            x: lin(-80.0, 80.0, 641),
            draw: |r| {
                let (fl, fg) = (r.gen_range(0.5..3.0), r.gen_range(4.0..10.0));
                vec![
                    (r.gen_range(-40.0..-20.0), 1.0), (fl, 0.0), (fg, 0.0), (1.0, 0.0),
                    (r.gen_range(20.0..40.0), 1.0), (1.2 * fl, 0.0), (0.9 * fg, 0.0), (r.gen_range(0.2..5.0), 0.0),
                    (0.0, 1.0),
                ]
            },
            data: |x, p| p[3] * voigt(x, p[0], p[1], p[2]).unwrap() + p[7] * voigt(x, p[4], p[5], p[6]).unwrap() + p[8],
        },
        Case {
            kind: ModelKind::BiLorentzian,
            x: lin(-3.0, 3.0, 301),
            draw: |r| {
                vec![
                    (r.gen_range(-0.5..0.5), 1.0), (r.gen_range(4.0..20.0), 0.0), (1.0, 0.0),
                    (r.gen_range(-0.3..0.3), 1.0), (r.gen_range(0.3..1.0), 0.0), (r.gen_range(0.05..0.5), 0.0),
                    (r.gen_range(0.0..0.2), 1.0),
                ]
            },
            data: |x, p| p[2] * lor(x, p[0], p[1]) - p[5] * lor(x, p[3], p[4]) + p[6],
        },
        Case {
            kind: ModelKind::PowerBroadening,
            x: vec![0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            draw: |r| vec![(r.gen_range(0.05..1.0), 0.0), (r.gen_range(0.2..5.0), 0.0)],
            data: |x, p| p[0] * (1.0 + x / p[1]).sqrt(),
        },
        Case {
            kind: ModelKind::PowerLinear,
            x: vec![0.5, 1.0, 2.0, 4.0],
            draw: |r| vec![(r.gen_range(0.05..1.0), 0.0), (r.gen_range(-0.1..0.5), 1.0)],
            data: |x, p| p[0] + p[1] * x,
        },
        Case {
            kind: ModelKind::TPoly { terms: vec![3, 5, 7] },
            x: temps.clone(),
            draw: |r| {
                vec![(r.gen_range(1.0..20.0), 0.0), (r.gen_range(1e-5..1e-3), 0.0), (r.gen_range(1e-10..1e-8), 0.0), (r.gen_range(1e-15..1e-13), 0.0)]
            },
            data: |x, p| p[0] + p[1] * x.powi(3) + p[2] * x.powi(5) + p[3] * x.powi(7),
        },
        Case {
            kind: ModelKind::TShift,
            x: temps,
            draw: |r| vec![(r.gen_range(-3e-3..3e-3), 1e-3), (r.gen_range(1e-9..1e-7), 0.0)],
            data: |x, p| p[0] * x * x + p[1] * x.powi(4),
        },
        Case {
            kind: ModelKind::PhononStrain { temperature: 4.7, with_offset: true },
            x: vec![20.0, 50.0, 80.0, 120.0, 180.0, 250.0, 330.0, 420.0],
            draw: |r| {
                let a = r.gen_range(1e-9..1e-6);
                let peak = phonon_linewidth(275.0, 4.7, a, &PhysicalConstants::default()).unwrap();
                vec![(a, 0.0), (r.gen_range(0.0..1.0), peak)]
            },
            data: |x, p| phonon_linewidth(x, 4.7, p[0], &PhysicalConstants::default()).unwrap() + p[1],
        },
    ]
}

fn round_trip(case: &Case, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let truth = (case.draw)(rng);
    let p: Vec<f64> = truth.iter().map(|t| t.0).collect();
    let y: Vec<f64> = case.x.iter().map(|&x| (case.data)(x, &p)).collect();
    let r: FitResult = fit_model(&ModelSpec::new(case.kind.clone()), &case.x, &y, &FitOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.converged, || format!("not converged: {:?}", r.diagnostic))?;
    for (name, &(want, floor)) in r.order.iter().zip(&truth) {
        let got = r.value(name);
        ensure((got - want).abs() <= 1e-5 * want.abs().max(floor), || format!("{name}: {got} vs {want}"))?;
    }
    Ok(())
}

fn fit_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_180_101);
    let mut summary = Vec::new();
    for case in cases() {
        let mut failed = Vec::new();
        for draw in 0..50 {
            if let Err(e) = round_trip(&case, &mut rng) {
                failed.push(format!("draw {draw}: {e}"));
            }
        }
        ensure(failed.is_empty(), || format!("{}: {} of 50 failed, first {}", case.kind.name(), failed.len(), failed[0]))?;
        summary.push(case.kind.name());
    }
    Ok(format!("50/50 draws within 1e-5 for {}", summary.join(", ")))
}

fn bundled_runs() -> [(&'static str, &'static str); 6] {
    [
        ("table1.cfg", "ple"),
        ("sweep.cfg", "sweep"),
        ("fig5_hole.cfg", "holeburn"),
        ("cpt.cfg", "cpt"),
        ("g2.cfg", "g2"),
        ("fig8_strain.cfg", "strain"),
    ]
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run_report.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let mut files = 0;
    for (cfg, what) in bundled_runs() {
        let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for (dir, threads) in runs.iter().zip([1, 4]) {
            sivspec(
                &["simulate", what, "--config", cfg_path(cfg).to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--plot"],
                Some(threads),
            )?;
        }
        let (a, b) = (outputs(runs[0].path()), outputs(runs[1].path()));
        ensure(!a.is_empty() && a == b, || format!("{cfg}: outputs differ between runs"))?;
        let digest = |d: &Path| json(&d.join("run_report.json")).map(|v| v["inputs_digest"].clone());
        ensure(digest(runs[0].path())? == digest(runs[1].path())?, || format!("{cfg}: digests differ"))?;
        files += a.len();
    }
    Ok(format!("{files} files from {} configs byte-identical across runs on 1 and 4 threads", bundled_runs().len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fine-structure splittings (table1.cfg)", splittings),
        ("isotope area ratios", isotope_ratios),
        ("lifetime-limited linewidth", lifetime_width),
        ("hole-burning power series", hole_extrapolation),
        ("phonon-limited linewidth peak", phonon_peak),
        ("CPT contrast and steady-state invariants", cpt_dip),
        ("T^3 linewidth model selection", model_selection),
        ("fine-structure merging with temperature", merging),
        ("fit round trips", fit_round_trips),
        ("byte-identical bundled outputs", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let dt = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{dt:.1} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{dt:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
