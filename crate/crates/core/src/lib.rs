//! Toolkit for H-type groups and their hypoelliptic Brownian motion:
//! exact construction of the defining matrix families, group and
//! sub-Laplacian operations, Dirichlet eigenvalues on Euclidean balls,
//! closed-form spectral-gap sandwich bounds, and Monte Carlo gap estimation
//! from small deviations and exit times.
//!
//! Floating-point computations are generic over the [`scalar::Real`] scalar
//! (`f32` or `f64`); matrix structure data is exact `i64` arithmetic.
//! Double-precision aliases for the common types live at the crate root.

pub mod bounds;
pub mod clifford;
pub mod eigen;
pub mod group;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod smalldev;
pub mod stats;

pub use clifford::{
    admissible, build_generators, hurwitz_radon, min_rep_dimension, verify_structure,
    HTypeStructure, VerificationReport,
};
pub use scalar::Real;

/// Group point at double precision.
pub type Element = group::GroupElement<f64>;
/// Derivative-oracle bundle at double precision.
pub type TestFn = group::TestFunction<f64>;
/// Fully stored trajectory at double precision.
pub type Path = sde::PathSample<f64>;
/// Terminal path statistics at double precision.
pub type Terminal = sde::TerminalSample<f64>;
/// Sandwich bounds at double precision.
pub type Bounds = bounds::GapBoundResult<f64>;
/// Rate estimate at double precision.
pub type Estimate = smalldev::GapEstimate<f64>;
