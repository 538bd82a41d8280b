//! Seeded random streams and trial seed derivation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An owned, reproducible random stream.
///
/// Uniforms come from ChaCha8; Gaussians are produced by Box–Muller from
/// pairs of uniforms, with the second value of each pair cached.
#[derive(Debug, Clone)]
pub struct SeededStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index on `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// `true` with probability `p`. `p = 0` never fires, `p = 1` always does.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (z0, z1) = box_muller(1.0 - self.uniform(), self.uniform());
        self.spare = Some(z1);
        z0
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }
}

/// Box–Muller transform of `u1 ∈ (0, 1]`, `u2 ∈ [0, 1)` into two
/// independent standard normals.
pub fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    (r * angle.cos(), r * angle.sin())
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `x + γ`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `(T, trial)` cell:
/// `splitmix64(splitmix64(splitmix64(base) ^ T) ^ trial)`.
pub fn trial_seed(base_seed: u64, nodes: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ nodes) ^ trial_index)
}
