//! Seed derivation. Every stochastic routine takes an explicit seed; child
//! streams are derived by mixing a parent seed with a stream label so that
//! replications, methods and iterations never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Builds a generator from a seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from `seed` and a stream label.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Stream labels for the fixed roles seeds play inside a campaign.
pub(crate) mod streams {
    pub const INITIAL: u64 = 0x1001;
    pub const FIT: u64 = 0x2002;
    pub const ACQ: u64 = 0x3003;
    pub const WALK: u64 = 0x4004;
    pub const NOISE: u64 = 0x5005;
    pub const RANDOM_CTRL: u64 = 0x6006;
    pub const TEST_POINTS: u64 = 0x7007;
    pub const PREDICT: u64 = 0x8008;
    pub const TRUTH: u64 = 0x9009;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
