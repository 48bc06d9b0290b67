//! Reproducible random streams.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`]. Independent
//! streams are derived from a master seed with [`stream`]: the ChaCha key is
//! expanded from the master seed and the 64-bit stream id selects a disjoint
//! keystream. The output is identical across platforms and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for stream `index` under `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed; used when a component takes a plain `u64` seed
/// rather than a generator.
pub fn child_seed(master_seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = master_seed
        ^ index
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
