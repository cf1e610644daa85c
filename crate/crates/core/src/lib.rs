//! Stabilized Lagrange-Galerkin finite elements for the incompressible
//! Navier-Stokes equations on the unit square and cube.
//!
//! The discretization uses continuous P1 elements for both velocity and
//! pressure with Brezzi-Pitkäranta pressure stabilization, and treats the
//! material derivative by tracking each quadrature point back along a
//! first-order (Euler) characteristic foot. The resulting linear system is
//! symmetric and time-independent, and is solved by MINRES every step.
//!
//! Module map:
//! - [`mesh`]: structured simplicial meshes and point location
//! - [`quadrature`]: degree-5 simplex rules
//! - [`fem`]: P1 fields, interpolation, gradients and norms
//! - [`transport`]: upwind feet and composed-function evaluation
//! - [`sparse`] / [`assembly`]: CSR storage and the saddle-point system
//! - [`linsolve`]: the MINRES solver
//! - [`problems`]: manufactured exact solutions
//! - [`driver`]: Stokes projection and the time loop
//! - [`report`]: relative errors, slopes, sweeps and CSV output

pub mod assembly;
pub mod driver;
pub mod error;
pub mod fem;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod report;
pub mod sparse;
pub mod transport;

pub use error::{Error, Result};

/// Points and vectors are stored as fixed 3-arrays; for `d = 2` the third
/// entry is unused and kept at zero.
pub type Point = [f64; 3];

/// Gradient of a vector field, `grad[i][j] = ∂u_i/∂x_j`.
pub type Gradient = [[f64; 3]; 3];
