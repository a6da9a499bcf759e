//! Seed derivation for independent random streams.
//!
//! Every stochastic object is driven by its own ChaCha stream whose seed is
//! a hash of `(master seed, replicate index, role)`. Work units never share
//! a generator, so results do not depend on scheduling.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct roles on the same replicate seed
/// give statistically independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamTag {
    Graph,
    Color,
    GammaSampler,
}

impl StreamTag {
    fn salt(self) -> u64 {
        match self {
            StreamTag::Graph => 0x6772_6170_6800_0001,
            StreamTag::Color => 0x636f_6c6f_7200_0002,
            StreamTag::GammaSampler => 0x6761_6d6d_6100_0003,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StreamTag::Graph => "graph",
            StreamTag::Color => "color",
            StreamTag::GammaSampler => "gamma-sampler",
        }
    }
}

impl fmt::Display for StreamTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Generator for one role of one (already derived) seed.
pub fn stream(seed: u64, tag: StreamTag) -> StreamRng {
    let key = mix64(seed ^ tag.salt());
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&mix64(key.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
