//! Shared fixtures for the benchmarks.

use palm_core::{
    dirichlet_weights, generate_universe, PolicyUniverse, UniverseShape, WeightVector,
};

pub fn frontier_universe(dim: usize, n: usize, seed: u64) -> PolicyUniverse {
    generate_universe(dim, n, 0.05, UniverseShape::ConcaveFrontier, seed).expect("valid sizes")
}

pub fn probes(dim: usize, n: usize, seed: u64) -> Vec<WeightVector> {
    dirichlet_weights(dim, n, 1.0, seed).expect("valid sizes")
}
