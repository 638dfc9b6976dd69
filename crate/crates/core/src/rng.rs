//! Reproducible random streams.
//!
//! Every random draw in a simulation comes from a ChaCha stream keyed by the
//! run seed plus a tuple of tags (trial, user, purpose, ...). Two draws with
//! the same key are bit-identical regardless of evaluation order or thread
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Tag values separating the purposes a stream is drawn for.
pub mod purpose {
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const CODEBOOK: u64 = 0x434f_4445;
    pub const ERROR: u64 = 0x4552_524f;
    pub const ALLOCATION: u64 = 0x414c_4c4f;
    pub const FIXED_CODEBOOK: u64 = 0x4649_5845;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the 64-bit key of the substream `(seed, tags...)`.
pub fn substream_key(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Independent generator for the substream `(seed, tags...)`.
pub fn substream(seed: u64, tags: &[u64]) -> SimRng {
    SimRng::seed_from_u64(substream_key(seed, tags))
}
