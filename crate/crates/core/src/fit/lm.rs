//! Box-constrained Levenberg–Marquardt for curve models y = f(x; p).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One model parameter as seen by the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub unit: String,
    pub init: f64,
    pub lo: f64,
    pub hi: f64,
    pub fixed: bool,
    /// Characteristic magnitude; steps and damping are measured in it.
    pub scale: f64,
}

impl ParamSpec {
    pub fn new(name: &str, unit: &str, init: f64, scale: f64) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
            init,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            fixed: false,
            scale,
        }
    }

    pub fn bounded(mut self, lo: f64, hi: f64) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Largest |Δpⱼ|/scaleⱼ of an accepted step.
    pub step_tol: f64,
    /// Relative cost decrease of an accepted step.
    pub cost_tol: f64,
    /// Gradient cosine below which the current point is accepted outright.
    pub gradient_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tol: 1e-8,
            cost_tol: 1e-10,
            gradient_tol: 1e-12,
        }
    }
}

/// Gradient cosine a converged result must satisfy.
pub const CONVERGED_GRADIENT_LIMIT: f64 = 1e-5;
const LAMBDA_LIMIT: f64 = 1e32;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub value: f64,
    /// 1σ; `None` when the covariance is undefined (no degrees of freedom,
    /// rank deficiency).
    pub sigma: Option<f64>,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub params: BTreeMap<String, ParamValue>,
    pub derived: BTreeMap<String, ParamValue>,
    pub chi2_per_dof: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub flags: Vec<String>,
    pub diagnostic: Option<String>,
    /// Indices of input points left out of the fit.
    pub excluded: Vec<usize>,
    /// Cost ½‖r‖² at the start and after every accepted step.
    #[serde(skip)]
    pub cost_log: Vec<f64>,
    /// Largest projected gradient cosine at the returned point.
    #[serde(skip)]
    pub gradient_cosine: f64,
    /// Parameter names in model order, and their covariance when defined.
    #[serde(skip)]
    pub order: Vec<String>,
    #[serde(skip)]
    pub covariance: Option<DMatrix<f64>>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> f64 {
        self.params
            .get(name)
            .or_else(|| self.derived.get(name))
            .unwrap_or_else(|| panic!("no parameter '{name}' in {} result", self.model))
            .value
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.params.get(name).or_else(|| self.derived.get(name)).and_then(|p| p.sigma)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    pub(crate) fn add_flag(&mut self, flag: &str) {
        if !self.has_flag(flag) {
            self.flags.push(flag.to_string());
        }
    }

    /// Values in parameter order of `names`.
    pub fn values(&self, names: &[&str]) -> Vec<f64> {
        names.iter().map(|n| self.value(n)).collect()
    }

    /// Records a derived quantity g(p) with its linearly propagated 1σ.
    pub fn derive(&mut self, name: &str, unit: &str, g: impl Fn(&[f64]) -> f64) {
        let p: Vec<f64> = self.order.iter().map(|n| self.params[n].value).collect();
        let value = g(&p);
        let sigma = self.covariance.as_ref().map(|cov| {
            let grad: Vec<f64> = (0..p.len())
                .map(|k| {
                    let h = (1e-6 * p[k].abs()).max(1e-9);
                    let mut q = p.clone();
                    q[k] = p[k] + h;
                    let up = g(&q);
                    q[k] = p[k] - h;
                    (up - g(&q)) / (2.0 * h)
                })
                .collect();
            let mut var = 0.0;
            for i in 0..p.len() {
                for j in 0..p.len() {
                    var += grad[i] * cov[(i, j)] * grad[j];
                }
            }
            var.max(0.0).sqrt()
        });
        self.derived.insert(name.to_string(), ParamValue { value, sigma, unit: unit.to_string() });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fit result serializes");
        s.push('\n');
        s
    }
}

/// A least-squares problem: residuals (f(xᵢ; p) − yᵢ)/σᵢ.
pub struct Problem<'a> {
    pub model_name: String,
    pub params: Vec<ParamSpec>,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub sigma: Option<&'a [f64]>,
    pub model: &'a (dyn Fn(f64, &[f64]) -> f64 + Sync),
    pub options: LmOptions,
}

struct Engine<'p, 'a> {
    pb: &'p Problem<'a>,
    free: Vec<usize>,
    /// Residual norm indistinguishable from round-off of the data.
    noise_floor: f64,
}

impl Engine<'_, '_> {
    fn residuals(&self, p: &[f64], out: &mut DVector<f64>) -> bool {
        for (i, (&x, &y)) in self.pb.x.iter().zip(self.pb.y).enumerate() {
            let w = self.pb.sigma.map_or(1.0, |s| s[i]);
            let r = ((self.pb.model)(x, p) - y) / w;
            if !r.is_finite() {
                return false;
            }
            out[i] = r;
        }
        true
    }

    /// Central-difference Jacobian in scaled coordinates; one-sided at bounds.
    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.pb.x.len();
        let mut j = DMatrix::zeros(n, self.free.len());
        let mut rp = DVector::zeros(n);
        let mut rm = DVector::zeros(n);
        let mut q = p.to_vec();
        for (col, &k) in self.free.iter().enumerate() {
            let spec = &self.pb.params[k];
            let h = (1e-6 * p[k].abs()).max(1e-9);
            let up = (p[k] + h).min(spec.hi);
            let dn = (p[k] - h).max(spec.lo);
            q[k] = up;
            let ok_up = self.residuals(&q, &mut rp);
            q[k] = dn;
            let ok_dn = self.residuals(&q, &mut rm);
            q[k] = p[k];
            let (num, den) = match (ok_up, ok_dn) {
                (true, true) if up > dn => (&rp - &rm, up - dn),
                _ => {
                    return Err(Error::numerical(
                        "jacobian",
                        format!("model not finite near {} = {}", spec.name, p[k]),
                    ))
                }
            };
            j.set_column(col, &(num * (spec.scale / den)));
        }
        Ok(j)
    }

    /// Free parameters at a bound whose descent direction leaves the box.
    fn active(&self, p: &[f64], g: &DVector<f64>) -> Vec<bool> {
        self.free
            .iter()
            .enumerate()
            .map(|(c, &k)| {
                let s = &self.pb.params[k];
                (p[k] <= s.lo && g[c] > 0.0) || (p[k] >= s.hi && g[c] < 0.0)
            })
            .collect()
    }

    fn gradient_cosine(&self, j: &DMatrix<f64>, r: &DVector<f64>, g: &DVector<f64>, active: &[bool]) -> f64 {
        let rn = r.norm();
        if rn <= self.noise_floor {
            return 0.0;
        }
        (0..self.free.len())
            .filter(|&c| !active[c])
            .map(|c| {
                let cn = j.column(c).norm();
                if cn == 0.0 {
                    0.0
                } else {
                    g[c].abs() / (cn * rn)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Solves `pb`. Non-convergence and rank deficiency are reported in the
/// result, not as errors; errors are reserved for unusable input.
/// Lands values within 1e-12 scale units of a bound exactly on it.
fn snap(v: f64, s: &ParamSpec) -> f64 {
    let eps = 1e-12 * s.scale;
    if v - s.lo <= eps {
        s.lo
    } else if s.hi - v <= eps {
        s.hi
    } else {
        v
    }
}

pub fn least_squares(pb: &Problem) -> Result<FitResult> {
    let n = pb.x.len();
    if pb.y.len() != n {
        return Err(Error::Input(format!("{} x values but {} y values", n, pb.y.len())));
    }
    if let Some(s) = pb.sigma {
        if s.len() != n || s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Input("sigma weights must be positive, one per point".into()));
        }
    }
    if pb.x.iter().chain(pb.y).any(|v| !v.is_finite()) {
        return Err(Error::Input("data contain NaN or infinite values".into()));
    }
    for s in &pb.params {
        if !(s.lo < s.hi) {
            return Err(Error::invalid(format!("bounds.{}", s.name), format!("lo {} must be < hi {}", s.lo, s.hi)));
        }
        if !s.init.is_finite() || s.init < s.lo || s.init > s.hi {
            return Err(Error::invalid(
                format!("init.{}", s.name),
                format!("{} outside bounds [{}, {}]", s.init, s.lo, s.hi),
            ));
        }
        if !(s.scale > 0.0) || !s.scale.is_finite() {
            return Err(Error::invalid(format!("scale.{}", s.name), "must be positive"));
        }
    }
    let free: Vec<usize> = (0..pb.params.len()).filter(|&k| !pb.params[k].fixed).collect();
    let m = free.len();
    if n < m.max(1) {
        return Err(Error::Input(format!("{n} data points for {m} free parameters")));
    }
    let data_norm = pb
        .y
        .iter()
        .enumerate()
        .map(|(i, y)| (y / pb.sigma.map_or(1.0, |s| s[i])).powi(2))
        .sum::<f64>()
        .sqrt();
    let eng = Engine { pb, free, noise_floor: 1e-13 * data_norm };
    let mut p: Vec<f64> = pb.params.iter().map(|s| s.init).collect();
    let mut r = DVector::zeros(n);
    if !eng.residuals(&p, &mut r) {
        return Err(Error::Input(format!("{} model is not finite at the initial parameters", pb.model_name)));
    }
    let mut cost = 0.5 * r.norm_squared();
    let mut cost_log = vec![cost];
    let mut iterations = 0;
    let mut lambda: Option<f64> = None;
    let mut converged = false;
    let mut diagnostic = None;
    let mut trial_r = DVector::zeros(n);

    'outer: while m > 0 && iterations < pb.options.max_iterations {
        if r.norm() <= eng.noise_floor {
            converged = true;
            break;
        }
        iterations += 1;
        let j = eng.jacobian(&p)?;
        let g = j.transpose() * &r;
        let active = eng.active(&p, &g);
        if eng.gradient_cosine(&j, &r, &g, &active) <= pb.options.gradient_tol {
            converged = true;
            break;
        }
        let mut a = j.transpose() * &j;
        for c in 0..m {
            if active[c] {
                a.row_mut(c).fill(0.0);
                a.column_mut(c).fill(0.0);
                a[(c, c)] = 1.0;
            }
        }
        let mut rhs = -g.clone();
        for c in 0..m {
            if active[c] {
                rhs[c] = 0.0;
            }
        }
        let lam = lambda.get_or_insert_with(|| 1e-3 * a.diagonal().max().max(f64::MIN_POSITIVE));
        loop {
            let mut damped = a.clone();
            for c in 0..m {
                damped[(c, c)] += *lam;
            }
            let Some(chol) = damped.cholesky() else {
                *lam *= 10.0;
                if *lam > LAMBDA_LIMIT {
                    diagnostic = Some("damped normal equations not positive definite".to_string());
                    break 'outer;
                }
                continue;
            };
            let delta = chol.solve(&rhs);
            let mut trial = p.clone();
            let mut max_step: f64 = 0.0;
            for (c, &k) in eng.free.iter().enumerate() {
                let s = &pb.params[k];
                trial[k] = snap((p[k] + delta[c] * s.scale).clamp(s.lo, s.hi), s);
                max_step = max_step.max((trial[k] - p[k]).abs() / s.scale);
            }
            let ok = eng.residuals(&trial, &mut trial_r);
            let trial_cost = 0.5 * trial_r.norm_squared();
            if ok && trial_cost < cost {
                let decrease = (cost - trial_cost) / cost;
                p = trial;
                std::mem::swap(&mut r, &mut trial_r);
                cost = trial_cost;
                cost_log.push(cost);
                *lam = (*lam / 10.0).max(f64::MIN_POSITIVE);
                if max_step < pb.options.step_tol && decrease < pb.options.cost_tol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            *lam *= 10.0;
            if *lam > LAMBDA_LIMIT || max_step < 1e-15 {
                // No representable decrease left along the damped direction.
                converged = true;
                break 'outer;
            }
        }
    }
    if m == 0 {
        converged = true;
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("iteration limit {} reached", pb.options.max_iterations));
    }

    let dof = n - m;
    let chi2 = 2.0 * cost;
    let chi2_per_dof = if dof > 0 { chi2 / dof as f64 } else { 0.0 };
    let mut flags = Vec::new();
    let mut sigmas: Vec<Option<f64>> = pb.params.iter().map(|s| if s.fixed { Some(0.0) } else { None }).collect();
    let mut gradient_cosine = 0.0;
    let mut covariance = None;
    if m > 0 {
        let j = eng.jacobian(&p)?;
        let g = j.transpose() * &r;
        let active = eng.active(&p, &g);
        gradient_cosine = eng.gradient_cosine(&j, &r, &g, &active);
        if converged && gradient_cosine > CONVERGED_GRADIENT_LIMIT {
            converged = false;
            diagnostic = Some(format!("stalled with gradient cosine {gradient_cosine:.3e}"));
        }
        let svd = j.clone().svd(false, true);
        let sv = &svd.singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > RANK_TOL * smax) {
            converged = false;
            flags.push("rank_deficient".to_string());
            let vt = svd.v_t.as_ref().expect("requested V");
            let imin = sv.imin();
            let null = vt.row(imin);
            let names: Vec<String> = eng
                .free
                .iter()
                .enumerate()
                .filter(|(c, _)| null[*c].abs() > 0.1)
                .map(|(_, &k)| pb.params[k].name.clone())
                .collect();
            diagnostic = Some(format!(
                "rank-deficient Jacobian (singular value ratio {:.3e}); unidentifiable combination of: {}",
                smin / smax,
                names.join(", ")
            ));
        } else if dof > 0 {
            let s2 = chi2_per_dof;
            // (J'J)⁻¹ = V Σ⁻² V', then undo the scaling
            let vt = svd.v_t.as_ref().expect("requested V");
            let mut cov = DMatrix::zeros(pb.params.len(), pb.params.len());
            for (c1, &k1) in eng.free.iter().enumerate() {
                for (c2, &k2) in eng.free.iter().enumerate() {
                    let v: f64 = (0..m).map(|q| vt[(q, c1)] * vt[(q, c2)] / (sv[q] * sv[q])).sum::<f64>();
                    cov[(k1, k2)] = v * s2 * pb.params[k1].scale * pb.params[k2].scale;
                }
            }
            for &k in &eng.free {
                sigmas[k] = Some(cov[(k, k)].max(0.0).sqrt());
            }
            covariance = Some(cov);
        } else {
            flags.push("zero_dof".to_string());
        }
        if eng
            .free
            .iter()
            .any(|&k| p[k] <= pb.params[k].lo || p[k] >= pb.params[k].hi)
        {
            flags.push("at_bound".to_string());
        }
    }
    if !converged {
        flags.push("not_converged".to_string());
    }
    let params = pb
        .params
        .iter()
        .zip(&p)
        .zip(&sigmas)
        .map(|((s, &v), &sig)| (s.name.clone(), ParamValue { value: v, sigma: sig, unit: s.unit.clone() }))
        .collect();
    Ok(FitResult {
        model: pb.model_name.clone(),
        params,
        derived: BTreeMap::new(),
        chi2_per_dof,
        converged,
        iterations,
        residual_norm: r.norm(),
        flags,
        diagnostic,
        excluded: Vec::new(),
        cost_log,
        gradient_cosine,
        order: pb.params.iter().map(|s| s.name.clone()).collect(),
        covariance,
    })
}
