//! Deterministic random streams keyed by `(seed, task indices)`.
//!
//! Every independent work item (restart, replication, `(n, rep)` cell) gets
//! its own ChaCha stream, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for the task identified by `keys` under `seed`.
pub fn stream(seed: u64, keys: &[u64]) -> StreamRng {
    let mut h = splitmix64(seed);
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    rng.set_stream(keys.len() as u64);
    rng
}
