//! Seeded, splittable random streams.
//!
//! Every stochastic operation in this crate draws from a [`ChaCha12Rng`]
//! handed in by the caller. Independent substreams (one per Monte Carlo
//! trial, one per grid point) are derived by hashing a master seed together
//! with integer tags, so results are reproducible regardless of execution
//! order or parallelism degree.

use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha12Rng;

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream from a master seed and a list of tags
/// (grid index, trial index, stage id, ...).
pub fn derive_stream(master_seed: u64, tags: &[u64]) -> ChaCha12Rng {
    let mut state = mix(master_seed);
    for &t in tags {
        state = mix(state ^ mix(t));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = mix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Stream for a top-level seed with no tags.
pub fn stream(seed: u64) -> ChaCha12Rng {
    derive_stream(seed, &[])
}
