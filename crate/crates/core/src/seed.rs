//! Seed derivation for reproducible, index-addressable random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator (a counter-based
//! stream cipher RNG) keyed by a 64-bit seed. Independent work units get their
//! own key via [`derive`], so results depend only on `(base seed, index)` and
//! never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for channel coefficients.
pub const CHANNEL_STREAM: u64 = 0;
/// Stream used for the support-block orthonormal basis.
pub const SUPPORT_STREAM: u64 = 1;

/// SplitMix64 finalizer over `(base, index)`.
pub fn derive(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for attempt `attempt` of drop `drop` in a Monte Carlo run.
pub fn drop_seed(base: u64, drop: u64, attempt: u64) -> u64 {
    derive(derive(base, drop), attempt)
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
