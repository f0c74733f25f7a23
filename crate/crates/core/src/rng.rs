//! Counter-style seeding: every replicate gets its own generator derived
//! from the master seed and a key, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `words` into `seed`, order-sensitively.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(seed), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn stream(seed: u64, words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, words))
}
