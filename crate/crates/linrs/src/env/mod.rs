//! Bandit environments: the synthetic linear-sigmoid task with a constant
//! optimal aspiration level, and adapters for the Mushroom and Jester
//! datasets.

pub mod jester;
pub mod mushroom;
pub mod synthetic;

use rand_chacha::ChaCha8Rng;

use crate::bandit::EnvironmentRound;

/// A stream of bandit rounds. `round` is pure in (self, t); reward
/// realization draws from the caller's RNG so replications stay
/// deterministic.
pub trait Environment: Send + Sync {
    fn arms(&self) -> usize;
    fn dim(&self) -> usize;
    fn round(&self, t: usize) -> EnvironmentRound;
    fn sample_reward(&self, t: usize, arm: usize, rng: &mut ChaCha8Rng) -> f64;
}

/// Seeded permutation of row indices, shared by the real-data adapters.
pub(crate) fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}
