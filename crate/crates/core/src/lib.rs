//! Toric Fano manifolds: exact stability invariants and a numerical solver
//! for generalized Kähler–Einstein potentials.
//!
//! Lattice data (vertices, moments, `l`, `α`) is exact; everything that
//! integrates over `ℝⁿ` is generic over [`scalar::Scalar`], with `f64`
//! aliases below.

pub mod catalog;
pub mod cubature;
pub mod duality;
pub mod error;
pub mod functional;
pub mod hull;
pub mod invariants;
pub mod linalg;
pub mod oracle1d;
pub mod polytope;
pub mod report;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use invariants::{alpha_invariant, solve_l, stability_report, AffineLinear, PLConvexFunction, StabilityReport};
pub use polytope::{LatticePoint, ReflexivePolytope};
pub use scalar::{Rational, Scalar};
pub use solver::{solve, SolverConfig};

pub type Potential = duality::LogSumExpPotential<f64>;
pub type Grid = duality::GridSpec<f64>;
pub type GridValues = duality::GridFunction<f64>;
pub type Quadrature = functional::QuadratureSpec<f64>;
pub type Report = solver::SolverReport<f64>;
pub type Residual = functional::Residual<f64>;
pub type ProperFit = functional::ProperFit<f64>;
pub type Prekopa = functional::PrekopaOutcome<f64>;
