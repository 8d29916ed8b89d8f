use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::{Error, Result};

/// Maps `u` in `(-1/2, 1/2)` to a `Lap(scale)` variate by inverting the CDF.
#[inline]
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * math::ln(1.0 - 2.0 * u.abs())
}

/// Seeded Laplace sampler. In noise-off mode every draw is exactly zero, which
/// turns the noisy learners into their deterministic skeletons.
#[derive(Debug, Clone)]
pub struct LaplaceSampler {
    rng: ChaCha8Rng,
    scale: f64,
    noise_off: bool,
}

impl LaplaceSampler {
    pub fn new(scale: f64, seed: u64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("Laplace scale must be positive and finite"));
        }
        Ok(LaplaceSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            scale,
            noise_off: false,
        })
    }

    pub fn noiseless(seed: u64) -> Self {
        LaplaceSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            scale: 0.0,
            noise_off: true,
        }
    }

    /// `noiseless` when `scale == 0`, a regular sampler otherwise.
    pub fn with_scale_or_off(scale: f64, seed: u64) -> Result<Self> {
        if scale == 0.0 {
            Ok(Self::noiseless(seed))
        } else {
            Self::new(scale, seed)
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_noise_off(&self) -> bool {
        self.noise_off
    }

    /// One draw from `Lap(scale)`.
    pub fn sample(&mut self) -> f64 {
        self.sample_scaled(1.0)
    }

    /// One draw from `Lap(factor * scale)`.
    pub fn sample_scaled(&mut self, factor: f64) -> f64 {
        if self.noise_off {
            return 0.0;
        }
        // u = 1/2 - r with r in (0, 1); r = 0 would give an infinite draw.
        let r = loop {
            let r: f64 = self.rng.random();
            if r > 0.0 {
                break r;
            }
        };
        laplace_from_uniform(0.5 - r, factor * self.scale)
    }
}
