//! Seeded random streams.
//!
//! Every random draw in the crate comes from an [`RngStream`]: a ChaCha20
//! keystream keyed by a 64-bit seed (expanded with `SeedableRng::seed_from_u64`)
//! and positioned on a 64-bit stream id. ChaCha is counter based, so distinct
//! `(seed, stream)` pairs give independent sequences and the same pair always
//! gives the same one. Floats and integers are derived from raw `u64` words by
//! the fixed conversions below rather than by `rand` distribution code, so the
//! mapping from words to values does not change with dependency upgrades.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.stream == other.stream
            && self.inner.get_word_pos() == other.inner.get_word_pos()
    }
}

/// SplitMix64 finalizer over two words; used to derive seeds.
pub fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream that depends only on this stream's identity and `tag`,
    /// not on how many values have been drawn from it.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(mix64(self.seed, self.stream), tag)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the closed interval [0, 1], 53 bits of resolution.
    pub fn unit_closed(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / ((1u64 << 53) - 1) as f64
    }

    /// Uniform on the closed interval [lo, hi].
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.unit_closed();
        (lo + (hi - lo) * u).clamp(lo, hi)
    }

    /// Uniform on [-1, 1].
    pub fn bipolar(&mut self) -> f64 {
        self.uniform(-1.0, 1.0)
    }

    /// Uniform integer in `0..n` by rejection; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below((hi - lo + 1) as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_ids_give_identical_draws() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    fn draws(seed: u64, stream: u64) -> Vec<u64> {
        let mut r = RngStream::new(seed, stream);
        (0..4).map(|_| r.next_u64()).collect()
    }

    #[test]
    fn streams_and_seeds_differ() {
        assert_ne!(draws(1, 0), draws(1, 1));
        assert_ne!(draws(1, 0), draws(2, 0));
    }

    #[test]
    fn derive_ignores_position() {
        let fresh = RngStream::new(9, 3);
        let mut used = fresh.clone();
        used.next_u64();
        assert_eq!(fresh.derive(5), used.derive(5));
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut r = RngStream::new(0, 0);
        for _ in 0..10_000 {
            let x = r.uniform(-3.0, 2.0);
            assert!((-3.0..=2.0).contains(&x));
            assert!(r.below(7) < 7);
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = RngStream::new(5, 5);
        let mut v: Vec<usize> = (0..50).collect();
        r.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
