//! Seed derivation. Every stochastic stream is keyed by a tuple of integers so
//! results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of stream identifiers.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from(base: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(base, path))
}

/// Stream tags, so that streams keyed by the same (client, round) stay independent.
pub mod stream {
    pub const PARTITION: u64 = 1;
    pub const INIT: u64 = 2;
    pub const PROBE: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const VARIANCE: u64 = 5;
    pub const CHANNEL: u64 = 6;
    pub const SYNTHETIC: u64 = 7;
    pub const TOY: u64 = 8;
}
