//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for failure sampling runs.
pub const SAMPLING: u64 = 1;
/// Stream for the randomized tries.
pub const TRIES: u64 = 2;
/// Stream for baseline merge orders.
pub const BASELINE: u64 = 3;
/// Stream for synthetic data.
pub const DATAGEN: u64 = 4;

/// An independent generator for run `index` of `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 40) ^ index);
    rng
}
