#![allow(dead_code)]

use nadim::system::{LevelSpec, SystemSpec, TailRule};
use rand::rngs::StdRng;
use rand::Rng;

/// Level of 2 or 3 maps with ratios summing below 0.95.
pub fn random_level(rng: &mut StdRng, max_branches: usize) -> LevelSpec<f64> {
    let n = rng.random_range(2..=max_branches);
    let pairs: Vec<(f64, u64)> = (0..n)
        .map(|_| (rng.random_range(0.3..1.0) * 0.95 / n as f64, 1))
        .collect();
    LevelSpec::from_ratios(&pairs).unwrap()
}

/// Non-autonomous system: `prefix` random levels, then a random periodic cycle.
pub fn random_spec(rng: &mut StdRng, prefix: usize, max_branches: usize) -> SystemSpec<f64> {
    let levels = (0..prefix).map(|_| random_level(rng, max_branches)).collect();
    let cycle = (0..rng.random_range(1..=3)).map(|_| random_level(rng, max_branches)).collect();
    SystemSpec::builder("random", TailRule::Periodic(cycle))
        .prefix(levels)
        .build()
        .unwrap()
}
