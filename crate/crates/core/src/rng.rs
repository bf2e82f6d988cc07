//! Seeded random streams. Every stochastic routine in the crate draws from
//! a ChaCha8 stream built here so results depend only on the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and a slot index.
pub fn derive_seed(base: u64, slot: u64) -> u64 {
    mix(mix(base) ^ slot.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}
