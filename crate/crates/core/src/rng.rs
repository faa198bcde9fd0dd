//! Reproducible randomness.
//!
//! Every random draw in the crate goes through a [`SeededStream`]: a 64-bit
//! seed plus a stream index selecting one of the 2^64 independent ChaCha8
//! streams for that seed. Replicate `r` of an experiment uses stream index `r`,
//! so replicates can be generated in any order (or in parallel) and still
//! produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl SeededStream {
    pub const fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// The stream used by replicate `r` of an experiment seeded with `self.seed`.
    pub const fn replicate(&self, r: u64) -> Self {
        Self::new(self.seed, r)
    }

    /// A child stream keyed by `tag`, independent of `self` and of children
    /// with other tags. Used where one logical draw is split into parallel
    /// pieces (e.g. the tiles of a long configuration).
    pub fn derive(&self, tag: u64) -> Self {
        let mixed = splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x243f_6a88_85a3_08d3)));
        Self::new(mixed, self.stream_index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
