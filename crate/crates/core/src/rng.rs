//! Counter-based per-shot random streams.
//!
//! Every shot draws from its own ChaCha8 stream keyed by `(seed, shot)`, so
//! results do not depend on how shots are scheduled across threads or split
//! across calls.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded next to every seed.
pub const PRNG_ID: &str = "chacha8-stream-per-shot-v1";

pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Fresh seed for runs that were not given one.
pub fn random_seed() -> u64 {
    rand::random()
}
