//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes an explicit [`Rng`]. Independent tasks
//! (trials, sweep points, threads) get their own stream via [`split`], which
//! selects one of ChaCha's 2^64 independent streams for the same key. Results
//! are therefore bit-reproducible from a single master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for the master seed's stream 0.
pub fn seeded(seed: u64) -> Rng {
    split(seed, 0)
}

/// The `stream`-th independent generator derived from `master`.
pub fn split(master: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed from a running generator.
pub fn child_seed(rng: &mut Rng) -> u64 {
    use rand::RngCore;
    rng.next_u64()
}
