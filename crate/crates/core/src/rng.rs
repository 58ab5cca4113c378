//! Deterministic random-stream derivation.
//!
//! Every randomized component takes its randomness from a [`ChaCha8Rng`]
//! derived from a master seed plus a path of stream ids. Streams for
//! different paths are independent for practical purposes, and two runs
//! with the same seed produce bit-identical draws regardless of thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; mixes a 64-bit value into a well-distributed one.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent RNG stream from `seed` and a path of stream ids
/// (for example `[epoch, step, slot]`).
pub fn stream_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    for &id in path {
        state = splitmix64(state ^ id.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    ChaCha8Rng::seed_from_u64(state)
}
