//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha20Rng` whose seed is derived
//! from a master seed plus a path of integer tags. Derivation is a pure
//! function, so a task's stream does not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The generator used throughout. ChaCha20 as implemented by `rand_chacha` 0.9.
pub type Rng = ChaCha20Rng;

/// Name recorded in run metadata so artifacts state which generator produced them.
pub const RNG_NAME: &str = "chacha20/rand_chacha-0.9";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a tag (replicate index, restart index, ...).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Derives a child seed from a path of tags.
pub fn derive_path(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(seed, |s, &t| derive_seed(s, t))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
