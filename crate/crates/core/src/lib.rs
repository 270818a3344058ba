//! Polytopic discontinuous Galerkin discretization of the dynamic
//! multiple-network poroelasticity (MPET) equations.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: simplicial and agglomerated polytopic meshes, face classification.
//! - [`quadrature`] and [`basis`]: sub-tessellation quadrature and orthonormal
//!   modal bases on arbitrary polytopes.
//! - [`model`], [`manufactured`], [`data`]: physical parameters, closed-form
//!   verification solutions and the problem data consumed by the assembler.
//! - [`assembly`]: SIPG forms for elasticity and Darcy networks, the
//!   pressure/displacement coupling and the right-hand sides.
//! - [`timestepper`]: coupled Newmark / theta-method integrator.
//! - [`analysis`]: DG norms, error reports, convergence rates and energy traces.
//! - [`config`], [`study`], [`vtk`]: run configuration, convergence studies and
//!   field output.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod checks;
pub mod config;
pub mod data;
pub mod error;
pub mod geometry;
pub mod manufactured;
pub mod mesh;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod study;
pub mod timestepper;
pub mod vtk;

pub use error::{Error, Result};
pub use geometry::Point;
