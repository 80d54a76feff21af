//! Fixtures shared by the criterion benches.

use relsmooth::problems::{generate_poisson, poisson_problem};
use relsmooth::{Geometry, Problem};

/// The 150×100 Poisson instance used by the method comparison.
pub fn poisson_fixture() -> Problem {
    poisson_problem(generate_poisson(150, 100, 0))
}

pub fn geometries(n: usize) -> Vec<Geometry> {
    vec![
        Geometry::euclidean(n),
        Geometry::entropy_simplex(n),
        Geometry::log_barrier(n),
        Geometry::log_barrier_simplex(n),
    ]
}
