//! Seed derivation.
//!
//! Trial `t` of a run with base seed `b` uses seed `b + t` (wrapping). Every
//! randomized routine draws from a `ChaCha8Rng` seeded by
//! `derive_seed(seed, tag, index)`. The tag separates modules so adding a new
//! consumer never shifts the stream of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub mod tag {
    pub const LMP: u64 = 0x4c4d_5000;
    pub const CORES: u64 = 0x434f_5245;
    pub const PIPAGE: u64 = 0x5049_5045;
    pub const PSEUDO: u64 = 0x5053_4555;
    pub const GENERATOR: u64 = 0x4745_4e00;
    pub const VERIFY: u64 = 0x5645_5249;
    pub const REDUCTION: u64 = 0x5245_4455;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(base: u64, trial: u64) -> u64 {
    base.wrapping_add(trial)
}

pub fn derive_seed(base: u64, tag: u64, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(base) ^ tag) ^ trial)
}

pub fn stream(base: u64, tag: u64, trial: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tag, trial))
}
