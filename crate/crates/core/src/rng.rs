//! Reproducible random streams.
//!
//! All randomness in the crate comes from [`ChaCha20Rng`] seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`. Uniform doubles use rand's standard
//! 53-bit conversion, `(next_u64 >> 11) · 2⁻⁵³`, giving values in `[0, 1)`.
//! Standard normals use the Box–Muller transform on two uniforms
//! `u₁ = 1 − U₁ ∈ (0, 1]`, `u₂ = U₂`:
//!
//! ```text
//! r = sqrt(−2 ln u₁)
//! z₀ = r cos(2π u₂)    (returned first)
//! z₁ = r sin(2π u₂)    (cached and returned by the next call)
//! ```
//!
//! The stream is therefore fully specified by the seed and the order of
//! draws, independent of platform except for last-bit differences in the
//! system `ln`/`cos`/`sin`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
pub struct NormalRng {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.standard_normal()).collect()
    }

    /// The underlying uniform generator, for shuffles and index sampling.
    pub fn inner(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}
