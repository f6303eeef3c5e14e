//! Stabilized finite elements for transient convection-diffusion-reaction
//! problems on deforming domains: ALE kinematics, SUPG stabilization,
//! implicit Euler / Crank-Nicolson / BDF-2 time stepping, and the stability
//! diagnostics that bound the admissible time step.

pub mod ale;
pub mod assembly;
pub mod basis;
pub mod cases;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod meshgen;
pub mod problem;
pub mod quadrature;
pub mod space;
pub mod stab;
pub mod timestepping;
pub mod vtk;

pub use error::{Error, Result};
