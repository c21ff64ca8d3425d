//! Seeded random streams for reproducible simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier written into every report next to the seed.
pub const RNG_ID: &str = "ChaCha8Rng(seed_from_u64, stream = trial index)";

/// The stream for trial `index` under `seed`. Streams are independent of
/// the order in which trials run, so parallel and serial runs agree.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream reserved for code construction (generator matrices and the like),
/// disjoint from every trial stream.
pub const CONSTRUCTION_STREAM: u64 = u64::MAX;

pub fn construction_rng(seed: u64) -> ChaCha8Rng {
    trial_rng(seed, CONSTRUCTION_STREAM)
}
