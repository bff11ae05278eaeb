//! Shared fixtures for the benchmarks.

use pfwillmore::harness::initial::circle_expansion;
use pfwillmore::{solve_heteroclinic, Field, PeriodicGrid, Potential, ProfileGrid, RadialGeometry};

/// Glued unit-circle field on an n² grid over [−2, 2)².
pub fn circle_field(n: usize, eps: f64) -> (PeriodicGrid, Field) {
    let p = Potential::standard_quartic();
    let prof = solve_heteroclinic(&p, ProfileGrid::new(20.0, 0.01).unwrap()).unwrap();
    let grid = PeriodicGrid::square(n, 2.0).unwrap();
    let geom = RadialGeometry::circle([0.0, 0.0], 1.0).unwrap();
    let (u, _) = circle_expansion(&prof, &p, &grid, &geom, eps, 1, 0.45).unwrap();
    (grid, u)
}
