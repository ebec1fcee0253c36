//! Deterministic RNG substreams.
//!
//! Every stochastic component (weight initialization, simulators, fold
//! assignment, replicate generation) draws from a ChaCha stream identified
//! by `(seed, stream)`. Distinct streams of the same seed are independent,
//! which is what makes restarts and replicates safe to run in any order or
//! in parallel without changing results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A deterministic generator for stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
