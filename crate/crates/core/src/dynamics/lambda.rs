//! Steady state of a driven Λ system {g1, g2, e}: pump on g1↔e
//! (transition C), probe on g2↔e (transition D).

use std::f64::consts::PI;

use nalgebra::{Complex, Matrix3, SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{format_number, Spectrum};
use crate::error::{Error, Result};

type C64 = Complex<f64>;
type M3 = Matrix3<C64>;

/// Rates and Rabi frequencies are FWHM-style GHz; the Liouvillian works in
/// angular units (×2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    /// Total excited-state decay, as the Lorentzian FWHM it produces.
    pub gamma_e: f64,
    /// Fraction of excited-state decay into g1.
    pub branching: f64,
    /// Decay rate of the g1–g2 coherence.
    pub gamma_gs: f64,
    /// Ground splitting; fixes the absolute laser difference frequency.
    pub delta_gs: f64,
    pub omega_pump: f64,
    pub omega_probe: f64,
    pub detuning_pump: f64,
    pub detuning_probe: f64,
}

impl LambdaConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("gamma_e", self.gamma_e),
            ("branching", self.branching),
            ("gamma_gs", self.gamma_gs),
            ("delta_gs", self.delta_gs),
            ("omega_pump", self.omega_pump),
            ("omega_probe", self.omega_probe),
            ("detuning_pump", self.detuning_pump),
            ("detuning_probe", self.detuning_probe),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(format!("lambda.{name}"), "must be finite"));
            }
        }
        if !(self.gamma_e > 0.0) {
            return Err(Error::invalid("lambda.gamma_e", format!("{} must be > 0", self.gamma_e)));
        }
        if !(self.branching > 0.0 && self.branching < 1.0) {
            return Err(Error::invalid("lambda.branching", format!("{} outside (0, 1)", self.branching)));
        }
        if !(self.gamma_gs >= 0.0) {
            return Err(Error::invalid("lambda.gamma_gs", format!("{} must be >= 0", self.gamma_gs)));
        }
        if !(self.omega_pump >= 0.0) || !(self.omega_probe >= 0.0) {
            return Err(Error::invalid("lambda.omega", "Rabi frequencies must be >= 0"));
        }
        if !(self.delta_gs > 0.0) {
            return Err(Error::invalid("lambda.delta_gs", format!("{} must be > 0", self.delta_gs)));
        }
        Ok(())
    }

    fn rate_scale(&self) -> f64 {
        2.0 * PI
            * [
                self.gamma_e,
                self.gamma_gs,
                self.omega_pump,
                self.omega_probe,
                self.detuning_pump.abs(),
                self.detuning_probe.abs(),
            ]
            .into_iter()
            .fold(1.0, f64::max)
    }
}

pub const G1: usize = 0;
pub const G2: usize = 1;
pub const E: usize = 2;

/// A 3×3 density matrix over {g1, g2, e}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    rho: M3,
    residual: f64,
}

impl DensityMatrix3 {
    pub fn matrix(&self) -> &M3 {
        &self.rho
    }

    pub fn population(&self, i: usize) -> f64 {
        self.rho[(i, i)].re
    }

    pub fn excited_population(&self) -> f64 {
        self.population(E)
    }

    pub fn coherence(&self, i: usize, j: usize) -> C64 {
        self.rho[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// Largest |ρᵢⱼ − ρⱼᵢ*|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        m
    }

    /// Frobenius norm of the Liouvillian applied to ρ, divided by the
    /// largest angular rate in the problem (at least 1).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Hermiticity, unit trace and diagonal bounds within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let h = self.hermiticity_error();
        let t = (self.trace() - C64::new(1.0, 0.0)).norm();
        let diag_ok = (0..3).all(|i| {
            let p = self.population(i);
            p >= -tol && p <= 1.0 + tol
        });
        if h > tol || t > tol || !diag_ok {
            return Err(Error::numerical(
                "density matrix",
                format!("hermiticity error {h:.3e}, trace error {t:.3e}, diagonal {:?}", self.diag()),
            ));
        }
        Ok(())
    }

    fn diag(&self) -> [f64; 3] {
        [self.population(0), self.population(1), self.population(2)]
    }
}

fn ket_bra(i: usize, j: usize) -> M3 {
    let mut m = M3::zeros();
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

struct Liouvillian {
    h: M3,
    jumps: Vec<M3>,
}

impl Liouvillian {
    fn new(cfg: &LambdaConfig) -> Self {
        let w = 2.0 * PI;
        let re = |v: f64| C64::new(v, 0.0);
        let mut h = M3::zeros();
        // Rotating frame: E_e = −δp, E_g2 = δr − δp (ħ = 1, angular units).
        h[(E, E)] = re(-w * cfg.detuning_pump);
        h[(G2, G2)] = re(w * (cfg.detuning_probe - cfg.detuning_pump));
        let op = re(0.5 * w * cfg.omega_pump);
        let or = re(0.5 * w * cfg.omega_probe);
        h[(E, G1)] = op;
        h[(G1, E)] = op;
        h[(E, G2)] = or;
        h[(G2, E)] = or;
        let gamma = w * cfg.gamma_e;
        let mut jumps = vec![
            ket_bra(G1, E) * re((gamma * cfg.branching).sqrt()),
            ket_bra(G2, E) * re((gamma * (1.0 - cfg.branching)).sqrt()),
        ];
        if cfg.gamma_gs > 0.0 {
            let k = re((0.5 * w * cfg.gamma_gs).sqrt());
            jumps.push((ket_bra(G1, G1) - ket_bra(G2, G2)) * k);
        }
        Self { h, jumps }
    }

    /// dρ/dt = −i[H, ρ] + Σ LρL† − ½{L†L, ρ}.
    fn apply(&self, rho: &M3) -> M3 {
        let i = C64::new(0.0, 1.0);
        let mut out = (self.h * rho - rho * self.h) * (-i);
        for l in &self.jumps {
            let ld = l.adjoint();
            let ldl = ld * l;
            out += l * rho * ld - (ldl * rho + rho * ldl) * C64::new(0.5, 0.0);
        }
        out
    }
}

// Real coordinates x = (p1, p2, Re ρ12, Im ρ12, Re ρ1e, Im ρ1e, Re ρ2e, Im ρ2e)
// with ρ = |e⟩⟨e| + Σ xₖ Bₖ, so that every x gives unit trace.
fn basis(k: usize) -> M3 {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let coh = |a: usize, b: usize, imag: bool| {
        // ρ_ab = Re + i·Im and ρ_ba its conjugate
        let mut m = M3::zeros();
        if imag {
            m[(a, b)] = i;
            m[(b, a)] = -i;
        } else {
            m[(a, b)] = one;
            m[(b, a)] = one;
        }
        m
    };
    match k {
        0 => ket_bra(G1, G1) - ket_bra(E, E),
        1 => ket_bra(G2, G2) - ket_bra(E, E),
        2 => coh(G1, G2, false),
        3 => coh(G1, G2, true),
        4 => coh(G1, E, false),
        5 => coh(G1, E, true),
        6 => coh(G2, E, false),
        7 => coh(G2, E, true),
        _ => unreachable!(),
    }
}

// The 8 independent real components of a Hermitian traceless matrix.
fn components(m: &M3) -> SVector<f64, 8> {
    SVector::<f64, 8>::from([
        m[(G1, G1)].re,
        m[(G2, G2)].re,
        m[(G1, G2)].re,
        m[(G1, G2)].im,
        m[(G1, E)].re,
        m[(G1, E)].im,
        m[(G2, E)].re,
        m[(G2, E)].im,
    ])
}

/// Steady state by a direct linear solve in the eight real coordinates.
///
/// With both drives off the steady state is not unique; the equal ground
/// mixture diag(½, ½, 0) is returned.
pub fn steady_state_lambda(cfg: &LambdaConfig) -> Result<DensityMatrix3> {
    cfg.validate()?;
    if cfg.omega_pump == 0.0 && cfg.omega_probe == 0.0 {
        let mut rho = M3::zeros();
        rho[(G1, G1)] = C64::new(0.5, 0.0);
        rho[(G2, G2)] = C64::new(0.5, 0.0);
        return Ok(DensityMatrix3 { rho, residual: 0.0 });
    }
    let liou = Liouvillian::new(cfg);
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    for k in 0..8 {
        a.set_column(k, &components(&liou.apply(&basis(k))));
    }
    let b = -components(&liou.apply(&ket_bra(E, E)));
    let lu = a.lu();
    let x = lu.solve(&b).ok_or_else(|| {
        Error::numerical(
            "steady state",
            format!("singular Liouvillian (no unique steady state) for {cfg:?}"),
        )
    })?;
    let mut rho = ket_bra(E, E);
    for k in 0..8 {
        rho += basis(k) * C64::new(x[k], 0.0);
    }
    // Symmetrize away round-off in the Hermitian part.
    rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let scale = cfg.rate_scale();
    let residual = liou.apply(&rho).norm() / scale;
    let out = DensityMatrix3 { rho, residual };
    if !(residual <= 1e-10) {
        return Err(Error::numerical(
            "steady state",
            format!("Liouvillian residual {residual:.3e} exceeds 1e-10 (condition-limited solve)"),
        ));
    }
    out.check(1e-10)?;
    Ok(out)
}

/// Excited population versus probe detuning. Frequencies of the returned
/// spectrum are the probe detunings (GHz), which must be strictly increasing.
pub fn cpt_scan(cfg: &LambdaConfig, probe_detunings: &[f64]) -> Result<Spectrum> {
    cfg.validate()?;
    let rho_ee: Vec<f64> = probe_detunings
        .par_iter()
        .map(|&d| {
            let mut c = *cfg;
            c.detuning_probe = d;
            steady_state_lambda(&c).map(|r| r.excited_population().max(0.0))
        })
        .collect::<Result<_>>()?;
    let mut s = Spectrum::new(probe_detunings.to_vec(), rho_ee)?;
    s.set_meta("kind", "cpt");
    s.set_meta("axis", "probe_detuning_ghz");
    s.set_meta("detuning_pump_ghz", format_number(cfg.detuning_pump));
    s.set_meta("delta_gs_ghz", format_number(cfg.delta_gs));
    s.set_meta("gamma_gs_ghz", format_number(cfg.gamma_gs));
    Ok(s)
}

/// Dip contrast 1 − I(two-photon resonance)/max(I) of a CPT scan, with I at
/// resonance interpolated from the scan.
pub fn cpt_contrast(scan: &Spectrum, detuning_pump: f64) -> Result<f64> {
    let max = scan.intensities().iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Input("CPT scan has no signal".into()));
    }
    Ok(1.0 - scan.value_at(detuning_pump)? / max)
}
