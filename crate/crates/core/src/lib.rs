//! Phase-field Willmore flow toolkit.
//!
//! Simulates the mass-preserving L² gradient flow of the generalized
//! Cahn-Hilliard energy
//!
//! ```text
//! F(u) = ∫ (1/2ε) (εΔu − ε⁻¹W'(u))² dx
//! ```
//!
//! on periodic grids, builds matched inner expansions around spheres and
//! evaluates their residuals, and provides a parametric volume-preserving
//! Willmore flow for planar curves as the sharp-interface reference.

pub mod error;
pub mod gch_solver;
pub mod harness;
pub mod geometry_asym;
mod linalg;
pub mod potential;
pub mod profile1d;
pub mod willmore_ref;

pub use error::{Error, Result};
pub use potential::Potential;
pub use profile1d::{
    build_l0, fredholm_solve, solve_heteroclinic, verify_identities, DiscreteL0,
    HeteroclinicProfile, IdentityReport, ProfileGrid,
};
pub use gch_solver::{
    Field, GchSolver, PeriodicGrid, PhaseState, SolverParams, Spectral, TimeScheme,
};
pub use geometry_asym::{ExpansionSet, RadialGeometry, ResidualReport};
pub use willmore_ref::{ClosedCurve, CurveFlowParams, CurveScheme};
