#![allow(dead_code)]

use maxcons_core::graph::{augment, default_radius, generate_rgg, Graph};
use maxcons_core::problem::{assemble, ProblemInstance};
use maxcons_core::seeded_rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// The n = 10 RGG used throughout: graph seed 42, private data seed 7.
pub fn rgg10() -> Graph {
    generate_rgg(10, default_radius(10), 42).unwrap()
}

pub fn rgg10_instance(c: f64) -> ProblemInstance {
    assemble(augment(&rgg10()), normal_vec(10, 7), c, 0.5).unwrap()
}
