//! Fixtures shared by the benchmarks.

use bootstrap_lab::lab::sample::random_torus_set;
use bootstrap_lab::{Geometry, LatticeState, Site, UpdateFamily};

pub fn duarte() -> UpdateFamily {
    UpdateFamily::by_name("duarte").expect("builtin")
}

/// A p-random subset of the `n x n` torus, fixed by `seed`.
pub fn random_torus(n: usize, p: f64, seed: u64) -> LatticeState {
    let sites = random_torus_set(n, p, seed, 0);
    LatticeState::from_sites(Geometry::Torus { n }, sites).expect("valid torus")
}

/// Seeds for the spanning benchmark: a p-random subset of a `side x side` box.
pub fn random_box_seeds(side: usize, p: f64, seed: u64) -> Vec<Site> {
    random_torus_set(side, p, seed, 1)
}
