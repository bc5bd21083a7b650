//! Seeded random-number streams.
//!
//! Every Monte Carlo sample draws from its own ChaCha8 stream keyed by
//! `(seed, worker_id)` with the 64-bit ChaCha stream id set to the sample
//! index. Two streams share state only if all three indices coincide.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream identified by `(seed, worker_id, sample_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0, 0)
    }

    pub fn substream(seed: u64, worker_id: u64, sample_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed;
        let mut w = worker_id ^ 0xA076_1D64_78BD_642F;
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let word = if i < 2 {
                splitmix64(&mut s)
            } else {
                splitmix64(&mut w)
            };
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(sample_id);
        RngStream { inner }
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw on `(0, 1]`, safe to take a logarithm of.
    #[inline]
    pub fn uniform_pos(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Standard exponential draw.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_pos().ln()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
