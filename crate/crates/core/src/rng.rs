//! Deterministic, counter-addressable randomness.
//!
//! Every random draw in the crate comes from ChaCha8 keyed by a 64-bit seed.
//! ChaCha exposes a 64-bit stream id and a word position, so any draw can be
//! addressed directly: the click samplers use the repetition index as the
//! stream id, which makes tallies independent of how repetitions are split
//! across workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recorded in every output artifact.
pub const GENERATOR_NAME: &str = "ChaCha8Rng/rand_chacha-0.9 (seed_from_u64, stream=repetition)";

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `index` of a run seeded with `seed`: `seed ^ mix64(index + 1)`.
///
/// For a fixed `seed` distinct indices always give distinct sub-seeds.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    seed ^ mix64(index.wrapping_add(1))
}

/// Domain separation between consumers of the same user seed.
pub fn tagged_seed(seed: u64, tag: &str) -> u64 {
    let h = tag
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    mix64(seed.wrapping_add(GOLDEN_GAMMA).wrapping_mul(GOLDEN_GAMMA) ^ h)
}

pub fn keyed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positions `base` at the start of stream `stream`.
pub fn seek_stream(rng: &mut ChaCha8Rng, stream: u64) {
    rng.set_stream(stream);
    rng.set_word_pos(0);
}

/// Uniform in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn next_unit(rng: &mut ChaCha8Rng) -> f64 {
    unit_f64(rng.next_u64())
}

/// Uniform in `(0, 1]`, safe to take the logarithm of.
#[inline]
pub fn next_unit_open0(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - next_unit(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn sub_seeds_are_distinct() {
        let seeds: HashSet<u64> = (0..10_000).map(|i| sub_seed(42, i)).collect();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn stream_addressing_matches_sequential_draws() {
        let mut a = keyed(9);
        seek_stream(&mut a, 17);
        let seq: Vec<u64> = (0..40).map(|_| a.next_u64()).collect();

        let mut b = keyed(9);
        b.set_stream(17);
        b.set_word_pos(2 * 33);
        assert_eq!(b.next_u64(), seq[33]);
    }

    #[test]
    fn unit_range() {
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
        let mut r = keyed(1);
        for _ in 0..1000 {
            let u = next_unit_open0(&mut r);
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
