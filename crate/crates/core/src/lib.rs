//! Phase retrieval from intensity transport.
//!
//! A paraxial complex wave `A = √I e^{iφ}` links its phase to measurable
//! intensity through two coupled equations: the elliptic transport of
//! intensity equation `∇·(I∇φ) = k I_z` and the nonlinear first-order
//! transport of phase equation `2k φ_z − ‖∇φ‖² = −Î`. This crate provides
//! the numerical laboratory for both:
//!
//! - [`grid`]: uniform-grid scalar fields with `.fld` file I/O,
//! - [`calculus`]: second-order finite-difference operators and the reduced
//!   intensity term Î,
//! - [`beams`]: analytic plane-wave and Gaussian-beam ground truths,
//! - [`sparse`]: CSR matrices and conjugate gradients,
//! - [`tie`]: Dirichlet TIE solves (direct and two-Poisson variants),
//! - [`characteristics`]: the seven characteristic ODEs of the phase
//!   equation, integrated with RK4,
//! - [`viscosity`]: the regularized phase equation marched in z after a
//!   log transform to a linear parabolic equation.

// Positivity guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beams;
pub mod calculus;
pub mod characteristics;
pub mod error;
pub mod grid;
pub mod interp;
pub mod sparse;
pub mod tie;
pub mod viscosity;

pub use beams::{Beam, GaussianBeamParams, PlaneWaveParams};
pub use calculus::{
    compute_i_hat, fd_divergence_of_flux, fd_gradient, fd_laplacian, field_error_norms,
    stack_z_derivative, ErrorNorms,
};
pub use characteristics::{CharacteristicState, IHatModel, InitialSurfaceData};
pub use error::{FieldError, MarchError, SolverError, TieError, TpeError};
pub use grid::{FieldStack, Grid2D, ScalarField2D};
pub use sparse::{CgReport, SparseMatrix};
pub use tie::{DirichletBC, TieProblem};
pub use viscosity::{ViscosityProblem, ViscositySettings};
