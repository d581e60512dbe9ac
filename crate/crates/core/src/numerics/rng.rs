use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A `(seed, stream)` pair that fully determines a ChaCha8 draw sequence.
///
/// Distinct stream ids select disjoint 2^64-block keystreams of the same key,
/// so tasks that derive their own stream never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngHandle {
    pub seed: u64,
    pub stream: u64,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Child handle for sub-task `tag` (restart index, replicate index, ...).
    /// The result depends only on `(self, tag)`, never on call order.
    pub fn derive(&self, tag: u64) -> Self {
        let mixed = splitmix64(splitmix64(self.stream ^ 0x243f_6a88_85a3_08d3) ^ splitmix64(tag.wrapping_add(1)));
        Self {
            seed: self.seed,
            stream: mixed,
        }
    }

    /// Fresh generator positioned at the start of this handle's stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
