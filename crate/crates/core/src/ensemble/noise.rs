//! Detection noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectrum::Spectrum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Shot,
}

/// Shot noise: each bin becomes `scale · Poisson(I / scale)`, so its
/// variance is `scale · I`. Bin `i` draws from ChaCha8 stream `i` of `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, scale: 0.0, seed: 0 }
    }

    pub fn shot(scale: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::Shot, scale, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid("noise.scale", format!("{} must be >= 0", self.scale)));
        }
        Ok(())
    }
}

// Above this mean the Poisson law is replaced by its normal limit.
const POISSON_MEAN_LIMIT: f64 = 1e12;

fn shot_sample(intensity: f64, scale: f64, seed: u64, bin: u64) -> f64 {
    let mean = intensity / scale;
    if !(mean > 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(bin);
    if mean < POISSON_MEAN_LIMIT {
        let k: f64 = Poisson::new(mean).expect("positive finite mean").sample(&mut rng);
        scale * k
    } else {
        let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
        (intensity + z * (scale * intensity).sqrt()).max(0.0)
    }
}

/// Applies `model` to `s`. The spectrum's metadata gains the noise settings.
pub fn add_noise(s: &Spectrum, model: &NoiseModel) -> Result<Spectrum> {
    model.validate()?;
    if model.kind == NoiseKind::None || model.scale == 0.0 {
        return Ok(s.clone());
    }
    let noisy: Vec<f64> = s
        .intensities()
        .par_iter()
        .enumerate()
        .map(|(i, &v)| shot_sample(v, model.scale, model.seed, i as u64))
        .collect();
    let mut out = s.replace_intensities(noisy);
    out.set_meta("noise", "shot");
    out.set_meta("noise_scale", super::spectrum::format_number(model.scale));
    out.set_meta("seed", model.seed.to_string());
    Ok(out)
}
