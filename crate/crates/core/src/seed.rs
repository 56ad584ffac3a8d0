//! Deterministic derivation of child seeds from a master seed.
//!
//! Every random stream in an experiment (partition shuffles, pseudodescriptor
//! tables, label permutations, forest bootstraps) gets its own seed computed
//! from the master seed and a path of integer tags, so results do not depend
//! on execution order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the harness when deriving seeds.
pub mod stream {
    pub const SIMULATION: u64 = 1;
    pub const CONSTITUENT_PARTITION: u64 = 2;
    pub const STANDARD_SPLIT: u64 = 3;
    pub const PSEUDODESCRIPTORS: u64 = 4;
    pub const Y_RANDOMIZATION: u64 = 5;
    pub const LEARNER: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `master`, one splitmix round per tag.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
