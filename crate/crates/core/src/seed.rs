//! Seed splitting.
//!
//! Every random stream is derived from one root seed: the stage name is hashed
//! with 64-bit FNV-1a, xor-ed into the root, and the result is passed through
//! the SplitMix64 finalizer. Stages therefore stay reproducible on their own
//! and two stages never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the named stage under `root`.
pub fn stage_seed(root: u64, stage: &str) -> u64 {
    splitmix64(root ^ fnv1a(stage.as_bytes()))
}

/// The crate's RNG, seeded for the named stage.
pub fn stage_rng(root: u64, stage: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stage_seed(root, stage))
}
