//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the 64-bit run seed and
//! positioned on its own 64-bit stream id, so sequences never overlap and do
//! not depend on how many other streams a run opens. Uniforms take the top
//! 53 bits of each `u64` draw and exponentials use the inverse CDF through
//! `libm`, which keeps samples bit-identical across platforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// What a stream feeds. Harvest and fading of the same node never share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum Purpose {
    Harvest = 1,
    Fading = 2,
}

/// Stream identifier: purpose in the high word, node or link index in the low word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId(u64);

impl StreamId {
    pub fn new(purpose: Purpose, index: u32) -> Self {
        Self(((purpose as u64) << 32) | index as u64)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

impl From<u64> for StreamId {
    fn from(raw: u64) -> Self {
        Self(raw)
    }
}

#[derive(Debug, Clone)]
pub struct SeededStream {
    seed: u64,
    id: StreamId,
    rng: ChaCha8Rng,
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

impl SeededStream {
    pub fn new(seed: u64, id: impl Into<StreamId>) -> Self {
        let id = id.into();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.raw());
        Self { seed, id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Next uniform draw in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform draw number `index` (0-based) without disturbing the cursor.
    pub fn uniform_at(&self, index: u64) -> f64 {
        let mut rng = self.rng.clone();
        rng.set_word_pos(2 * index as u128);
        (rng.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Next exponential draw with the given mean.
    pub fn next_exponential(&mut self, mean: f64) -> f64 {
        exponential_from_uniform(self.next_uniform(), mean)
    }
}

pub(crate) fn exponential_from_uniform(u: f64, mean: f64) -> f64 {
    // u < 1, so log1p(-u) is finite.
    -mean * libm::log1p(-u)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices, e.g.
/// `(grid point, trial)`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p)))
}
