//! Surface finite elements for scalar elliptic problems on closed surfaces in R³.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: charts and the exact differential geometry of the surface.
//! * [`mesh`]: icosahedral sphere and structured torus triangulations.
//! * [`assembly`]: P1 stiffness, convection, mass and load assembly, discrete norms.
//! * [`solvers`]: mean-zero diffusion, general elliptic, divergence-free
//!   convection–diffusion and biharmonic solvers, well-posedness checks and
//!   spectral estimators.
//! * [`verification`]: manufactured solutions, convergence studies and identity tests.
//!
//! All numerical code is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`). The `*64` aliases below fix the scalar to `f64`,
//! which is what the documented tolerances assume.

// NaN must fail every positivity test, and fixed-size index loops read like the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod scalar;
pub mod solvers;
pub mod sparse;
pub mod verification;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Chart64 = geometry::Chart<f64>;
pub type Atlas64 = geometry::Atlas<f64>;
pub type ScalarField64 = field::AmbientScalarField<f64>;
pub type VectorField64 = field::AmbientVectorField<f64>;
pub type MatrixField64 = field::AmbientMatrixField<f64>;
pub type SurfaceMesh64 = mesh::SurfaceMesh<f64>;
pub type CsrMatrix64 = sparse::CsrMatrix<f64>;
pub type CoefficientSet64 = assembly::CoefficientSet<f64>;
pub type DiscreteField64 = assembly::DiscreteField<f64>;
pub type SolveReport64 = solvers::SolveReport<f64>;
pub type ConditionReport64 = solvers::ConditionReport<f64>;
pub type ManufacturedCase64 = verification::ManufacturedCase<f64>;
pub type ConvergenceReport64 = verification::ConvergenceReport<f64>;
