//! Seeded random streams.
//!
//! Every stochastic step draws from its own ChaCha20 stream whose 32-byte key
//! is `SHA-256(seed as 8 little-endian bytes || purpose tag in UTF-8)`.
//! Integers below a bound use rejection sampling on 64-bit outputs and reals
//! use the top 53 bits, so streams reproduce across platforms.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub const PURPOSE_SAMPLE: &str = "sample";
pub const PURPOSE_SPLIT: &str = "split";
pub const PURPOSE_STATS: &str = "stats";
pub const PURPOSE_BASELINE: &str = "baseline";

#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha20Rng,
}

impl Stream {
    pub fn new(seed: u64, purpose: &str) -> Self {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update(purpose.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        Stream {
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        // reject the top partial block so every residue is equally likely
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fisher-Yates, drawing from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
