//! Counter-derived random streams.
//!
//! Every random draw in the crate comes from a generator keyed by a fixed
//! tuple of counters (seed, sequence key, particle, position, ...), so results
//! never depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains keep keys from different subsystems apart.
pub mod domain {
    pub const GENERATE: u64 = 0x47454e;
    pub const COIN: u64 = 0x434f49;
    pub const CONTEXT: u64 = 0x435458;
    pub const PERMUTE: u64 = 0x504552;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of counters into one 64-bit key.
pub fn derive_key(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6F73_6361_725F_6B69, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for the given counter tuple.
pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(parts))
}

/// Stable content key of a token sequence, used so that the random streams of
/// a sequence do not depend on its position within a batch.
pub fn content_key(tokens: &[usize], labels: &[bool]) -> u64 {
    let mut h = derive_key(&[tokens.len() as u64, labels.len() as u64]);
    for &t in tokens {
        h = splitmix64(h ^ t as u64);
    }
    for &l in labels {
        h = splitmix64(h ^ l as u64);
    }
    h
}
