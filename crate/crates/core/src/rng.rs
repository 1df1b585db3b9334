//! Counter-keyed random streams.
//!
//! Every random draw in the crate comes from a stream keyed by a seed and a
//! tuple of indices (frame, pixel, ...), so results never depend on how work
//! is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a seed and a list of keys into one 64-bit value.
pub fn mix(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix(seed), |acc, &k| splitmix(acc ^ splitmix(k.wrapping_add(GOLDEN))))
}

/// Independent generator for the stream identified by `(seed, keys)`.
pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, keys))
}

// Domain tags keep streams of different subsystems apart even for equal seeds.
pub(crate) const TAG_RENDER_NOISE: u64 = 0x52_4e;
pub(crate) const TAG_REFSIM: u64 = 0x52_53;
pub(crate) const TAG_SCENE: u64 = 0x53_43;
pub(crate) const TAG_INIT: u64 = 0x49_4e;
pub(crate) const TAG_SPLIT: u64 = 0x53_50;
pub(crate) const TAG_SHUFFLE: u64 = 0x53_48;
pub(crate) const TAG_V0: u64 = 0x56_30;
