//! Deterministic per-task random streams.
//!
//! Every Monte-Carlo routine takes an explicit `u64` seed. Parallel work
//! derives one independent stream per task index so results do not depend
//! on scheduling.

use rand::rngs::StdRng;
use rand::SeedableRng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream addressed by `path` under the root `seed`.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn stream(seed: u64, path: &[u64]) -> StdRng {
    StdRng::seed_from_u64(derive_seed(seed, path))
}
