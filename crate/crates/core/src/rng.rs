//! The frozen random-number contract shared by `datagen`, `oracle` and `learners`.
//!
//! Every stream is ChaCha20 keyed by the 64-bit seed (little-endian in the first
//! eight key bytes, remaining bytes zero) with the ChaCha stream id selecting an
//! independent substream. Uniform variates take the top 52 bits of a `u64` and
//! are centred in their cell, so they lie strictly inside (0, 1). Identical
//! `(seed, stream)` pairs give identical sequences on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Name of the generator, recorded in reports and docs.
pub const GENERATOR: &str = "chacha20/u52-centered";

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha20Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        // 52 bits plus the half-cell offset fit exactly in a double.
        const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
        ((self.next_u64() >> 12) as f64 + 0.5) * SCALE
    }

    /// Uniform integer in `0..n` by inverse CDF on [`Self::uniform`].
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}
