//! Portable seeded randomness for protocol runs.
//!
//! The generator is ChaCha20 (20 rounds, stream 0, block counter starting
//! at 0) keyed by the 64-bit seed written little-endian into the first 8
//! bytes of the 32-byte key, remaining key bytes zero. Output words are
//! consumed as follows, which any implementation of ChaCha20 can reproduce:
//!
//! * `next_u64`: two consecutive 32-bit keystream words, the first one as
//!   the low half.
//! * `uniform`: `(next_u64 >> 11) · 2⁻⁵³`, a double in `[0, 1)`.
//! * `below(n)`: rejection sampling — draw `x = next_u64` until
//!   `x < n·⌊2⁶⁴/n⌋`, return `x mod n`.
//! * `bernoulli(p)`: `uniform() < p`.
//! * `shuffle`: Fisher–Yates from the last index down, swapping `i` with
//!   `below(i + 1)`.
//!
//! The first outputs for seed 0 are frozen in the unit tests below.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Debug)]
pub struct ProtocolRng {
    inner: ChaCha20Rng,
}

impl ProtocolRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        ProtocolRng { inner: ChaCha20Rng::from_seed(key) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        let zone = (u64::MAX / n) * n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    pub fn bit(&mut self) -> u8 {
        self.below(2) as u8
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in draw order (partial Fisher–Yates
    /// from the front).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// Index drawn from a discrete distribution (weights need not be
    /// normalized); the last index with positive weight absorbs rounding.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.uniform() * total;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                last = i;
                if u < w {
                    return i;
                }
                u -= w;
            }
        }
        last
    }
}

/// Derives an independent stream seed for sub-task `k` of a run with
/// master seed `seed` (SplitMix64 finalizer of `seed + k·φ`).
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_vectors_seed_zero() {
        let mut r = ProtocolRng::new(0);
        let words: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        // ChaCha20, all-zero key and nonce: keystream begins 76 b8 e0 ad a0 f1 3d 90 …
        assert_eq!(words[0], 0x903d_f1a0_ade0_b876);
        assert_eq!(words, FROZEN_SEED0.to_vec());
    }

    // Words 2 and 3 continue the same published keystream block
    // (40 5d 6a e5 53 86 bd 28 | bd d2 19 b8 a0 8d ed 1a).
    const FROZEN_SEED0: [u64; 3] = [0x903d_f1a0_ade0_b876, 0x28bd_8653_e56a_5d40, 0x1aed_8da0_b819_d2bd];

    #[test]
    fn below_stays_in_range() {
        let mut r = ProtocolRng::new(7);
        for n in 1..50u64 {
            assert!(r.below(n) < n);
        }
    }

    #[test]
    fn sample_indices_are_distinct() {
        let mut r = ProtocolRng::new(3);
        let mut s = r.sample_indices(10, 6);
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 6);
    }
}
