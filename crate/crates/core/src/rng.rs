//! Seed derivation for reproducible parallel simulation.
//!
//! Every replicate draws from its own ChaCha8 generator whose 64-bit seed is
//! a SplitMix64 mix of `(base_seed, scenario_key, replicate)`. A replicate's
//! stream therefore depends only on those three integers, never on the order
//! in which replicates are executed or on the number of worker threads.
//!
//! Standard normals are produced by `rand_distr::StandardNormal`, which uses
//! the Ziggurat method (ZIGNOR variant, 256 layers). The crate versions are
//! pinned in `Cargo.lock`, so a seed reproduces the same draws everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` in scenario `scenario_key`.
pub fn replicate_seed(base_seed: u64, scenario_key: u64, replicate: u64) -> u64 {
    let h = splitmix64(base_seed);
    let h = splitmix64(h ^ scenario_key);
    splitmix64(h ^ replicate)
}

/// Stable 64-bit key for a scenario identifier (first 8 bytes of its SHA-256).
pub fn scenario_key(id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn generator(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
