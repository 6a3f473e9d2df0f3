//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, path)`, where `path` names the task (e.g. `[BOOTSTRAP, replicate,
//! X_INDICES]`). A task's stream depends only on its address, so results do
//! not depend on how tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const BOOTSTRAP: u64 = 0x6273;
pub const PERMUTATION: u64 = 0x7065;
pub const SIMULATION: u64 = 0x7369;
pub const CONTRAST: u64 = 0x636f;
pub const TRIAL: u64 = 0x7472;

/// Substreams of one bootstrap replicate.
pub const X_INDICES: u64 = 0;
pub const ERROR_INDICES: u64 = 1;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream keyed by the seed, positioned on the ChaCha stream named by `path`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut id = splitmix64(path.len() as u64);
    for &p in path {
        id = splitmix64(id ^ splitmix64(p));
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(id);
    rng
}

/// Child seed for a nested task (e.g. one Monte Carlo trial that runs its own
/// bootstrap).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    use rand::RngCore;
    stream(seed, path).next_u64()
}
