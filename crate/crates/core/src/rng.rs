//! Seed derivation for independent, order-free random streams.
//!
//! Every randomized step draws from its own ChaCha stream whose seed is a hash
//! of a master seed and a path of integer coordinates (cycle, round, member,
//! batch, ...). Streams therefore do not depend on execution order, which keeps
//! parallel filtering rounds bit-identical to sequential ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a coordinate path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = mix(master.wrapping_add(GOLDEN));
    for (depth, &c) in path.iter().enumerate() {
        h = mix(h ^ mix(c.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 2))));
    }
    h
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Stable small integer tags for named stream purposes.
pub mod tag {
    pub const SPLIT: u64 = 1;
    pub const INIT_POOL: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const FILTER: u64 = 4;
    pub const SELECT: u64 = 5;
    pub const TRIAL: u64 = 6;
}
