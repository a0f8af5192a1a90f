//! Seeded random streams.
//!
//! Every sampler draws from ChaCha8, a counter-based generator whose output
//! depends only on `(seed, stream)` and is identical on every platform.
//! Parallel workers use the same seed with distinct stream numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
