//! Seeded, portable random streams.
//!
//! Every random draw in the engine comes from a ChaCha8 keystream. The key is
//! derived from the 64-bit run seed with `ChaCha8Rng::seed_from_u64` and a
//! draw site selects its own 64-bit stream id, `(purpose << 32) | index`,
//! through `set_stream`. Draw sites never share a stream, so adding a feature
//! or a permutation never perturbs the values of another site.
//!
//! Variates are derived from raw `u64` words in a fixed way:
//!
//! * uniform on `[0, 1)`: `(word >> 11) * 2^-53`
//! * integer below `n`: `(word as u128 * n as u128) >> 64`
//! * standard normal: Box–Muller, `sqrt(-2 ln(1 - u1)) * cos(2π u2)`, one
//!   value per pair of uniforms (the sine half is discarded)
//! * shuffle: Fisher–Yates from the last index down, `j = below(i + 1)`

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Purpose tags occupying the upper 32 bits of a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Purpose {
    Protected = 1,
    FeatureMode = 2,
    FeatureNoise = 3,
    Label = 4,
    Split = 5,
    Permutation = 6,
    Sweep = 7,
    Experiment = 8,
}

pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, purpose: Purpose, index: u32) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(((purpose as u64) << 32) | index as u64);
        Stream { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Index into `weights` drawn proportionally to the weights.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        // rounding can leave u marginally above the last bucket
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Derives a child seed for the `index`-th independent sub-run of `seed`.
pub fn child_seed(seed: u64, purpose: Purpose, index: u32) -> u64 {
    Stream::new(seed, purpose, index).next_u64()
}
