//! Counter-based seed derivation.
//!
//! Every random stream in a campaign is keyed by a tuple of integers
//! (master seed, N, drop index, stream id), so results do not depend on
//! the order in which drops are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Random streams used while building one drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Buildings = 1,
    Nodes = 2,
    Content = 3,
    Caches = 4,
    Requests = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `root` one word at a time.
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(root), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed of drop `drop_index` in the sub-campaign with `n` requesting UEs.
pub fn drop_seed(master_seed: u64, n: usize, drop_index: usize) -> u64 {
    derive_seed(master_seed, &[n as u64, drop_index as u64])
}

pub fn stream_rng(drop_seed: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(derive_seed(drop_seed, &[stream as u64]))
}
