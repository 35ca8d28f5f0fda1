//! Geometrically nonlinear planar Cosserat membrane shell.
//!
//! The model couples a midsurface deformation `m: ω ⊂ ℝ² → ℝ³` with an
//! independent microrotation field `R: ω → SO(3)`.  This crate provides the
//! layers needed to pose and minimize the associated elastic energy:
//!
//! * [`so3`] — exact 3×3 kernels: axial maps, orthogonal decomposition, the
//!   weighted projector ℙ, exponential/logarithm and polar projection.
//! * [`energy`] — pointwise membrane, curvature, director and load densities
//!   with switchable transverse-shear averaging.
//! * [`stress`] — Biot/Piola–Kirchhoff stress tensors, connection and wryness
//!   of a rotation field, pointwise and weak Euler–Lagrange residuals.
//! * [`fem`] — P1 triangle meshes on the unit disk, state containers,
//!   boundary conditions and exact energy/gradient assembly.
//! * [`optim`] — Riemannian gradient descent with Armijo backtracking over
//!   `(ℝ³)ᴺ × SO(3)ᴺ`, plus finite-difference gradient verification.
//! * [`checks`] — seeded random identity suites shared by the CLI verifier
//!   and the acceptance tests.

pub mod checks;
pub mod energy;
pub mod error;
pub mod fem;
pub mod optim;
pub mod so3;
pub mod stress;

pub use error::{Result, ShellError};
pub use so3::{Mat3, Mat3x2, Rotation, Vec3};
