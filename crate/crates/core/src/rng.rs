//! Seeded random streams.
//!
//! Every landscape draws its coefficients from a [`ChaCha8Rng`] seeded with
//! `seed_from_u64`. Uniform variates take the top 53 bits of `next_u64`, and
//! Gaussian variates use the Marsaglia polar method, returning the first
//! value of each accepted pair and caching the second. These transforms are
//! part of the reproducibility contract: changing any of them changes every
//! generated landscape.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
pub struct SeededStream {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Uniform draw in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Standard normal draw (mean 0, standard deviation 1).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the reference landscape for one sweep model.
///
/// The 64-bit input word packs `sigma_index` into bits 32..63 and
/// `model_index` into bits 0..31, is XORed with `mix64(base_seed)` and then
/// mixed again. For a fixed `base_seed` the map from
/// `(sigma_index, model_index)` to seed is injective because both steps are
/// bijections on `u64`.
pub fn derive_model_seed(base_seed: u64, sigma_index: u32, model_index: u32) -> u64 {
    let packed = (u64::from(sigma_index) << 32) | u64::from(model_index);
    mix64(mix64(base_seed) ^ packed)
}
