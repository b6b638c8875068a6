//! Counter-based deterministic random number generation.
//!
//! Every draw is a pure function of `(seed, index, slot)`, so Monte Carlo
//! loops can run in any order (including in parallel) and still produce
//! bit-identical streams. There is no mutable generator state to share.

use std::f64::consts::TAU;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x243F_6A88_85A3_08D3;

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a key tuple into 64 uniformly distributed bits.
#[inline]
pub fn hash4(a: u64, b: u64, c: u64, d: u64) -> u64 {
    let mut h = a ^ SEED_SALT;
    h = mix64(h.wrapping_add(GAMMA));
    h = mix64((h ^ b).wrapping_add(GAMMA));
    h = mix64((h ^ c).wrapping_add(GAMMA));
    h = mix64((h ^ d).wrapping_add(GAMMA));
    h
}

/// Map 64 random bits to the open interval (0, 1).
///
/// Both endpoints are excluded so the result is safe under `ln` and as a
/// phase fraction.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Stateless counter-based generator keyed by a seed.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: mix64(seed ^ SEED_SALT) }
    }

    pub fn seed_key(&self) -> u64 {
        self.key
    }

    /// Uniform draw in (0, 1) for counter `(index, slot)`.
    #[inline]
    pub fn uniform(&self, index: u64, slot: u64) -> f64 {
        unit_open(hash4(self.key, index, slot, 2))
    }

    /// Standard normal draw for counter `(index, slot)` via Box-Muller.
    #[inline]
    pub fn normal(&self, index: u64, slot: u64) -> f64 {
        let u1 = unit_open(hash4(self.key, index, slot, 0));
        let u2 = unit_open(hash4(self.key, index, slot, 1));
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Pair of standard normals with correlation `rho`.
    #[inline]
    pub fn correlated_normal_pair(&self, index: u64, rho: f64) -> (f64, f64) {
        let z1 = self.normal(index, 0);
        let z2 = self.normal(index, 1);
        (z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2)
    }

    /// Uniform point in the square [-r, r]^2 for counter `index`.
    #[inline]
    pub fn point_in_square(&self, index: u64, r: f64) -> [f64; 2] {
        [
            r * (2.0 * self.uniform(index, 10) - 1.0),
            r * (2.0 * self.uniform(index, 11) - 1.0),
        ]
    }
}
