use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every stochastic step in the crate.
pub type Rng = ChaCha8Rng;

/// Deterministic generator for `seed`. `stream` separates independent
/// consumers (k-means restarts, negative sampling) that share one seed.
pub fn seeded_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
