//! Deterministic random streams.
//!
//! Every experiment cell (budget `N`, replication index) gets its own ChaCha
//! stream derived from the master seed, so results do not depend on how cells
//! are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream for a single seed, stream id 0.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for experiment cell `(n, replication)` under `seed`.
pub fn cell_stream(seed: u64, n: usize, replication: usize) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) ^ replication as u64);
    rng
}
