//! Seed derivation.
//!
//! Every random quantity is drawn from a stream keyed by the run seed plus a
//! tuple of tags (stage, snapshot, entity ids). Streams are independent of
//! evaluation order, so parallel and sequential execution produce identical
//! results.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_LTE: u64 = 0x4c54;
pub(crate) const TAG_NR: u64 = 0x4e52;
pub(crate) const TAG_SIXG: u64 = 0x3647;
pub(crate) const TAG_TRAFFIC: u64 = 0x5446;
pub(crate) const TAG_HOTSPOT: u64 = 0x4853;
pub(crate) const TAG_USERS: u64 = 0x5545;
pub(crate) const TAG_LINK: u64 = 0x4c4b;
pub(crate) const TAG_FADING: u64 = 0x4644;
pub(crate) const TAG_SCHED: u64 = 0x5343;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `tags` into `root`, producing a well-mixed 64-bit seed.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(root ^ GOLDEN), |acc, &t| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(t.wrapping_add(GOLDEN)))
    })
}

/// A ChaCha8 generator for the stream `(root, tags...)`.
pub fn stream(root: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tags))
}

/// Random-access source of unit-power circular Gaussian samples.
///
/// Sample `i` depends only on the key and `i`, which lets the link stage
/// evaluate fading on an arbitrary subset of PRBs without generating the
/// whole per-link sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterStream {
    key: u64,
}

impl CounterStream {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    #[inline]
    fn word(&self, counter: u64) -> u64 {
        mix64(self.key ^ mix64(counter.wrapping_mul(GOLDEN).wrapping_add(GOLDEN)))
    }

    /// Uniform sample in the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// CN(0, 1) sample via Box-Muller on two uniforms.
    #[inline]
    pub fn complex_normal(&self, index: u64) -> Complex64 {
        let u1 = self.uniform(2 * index);
        let u2 = self.uniform(2 * index + 1);
        let r = (-u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        Complex64::new(r * c, r * s)
    }
}
