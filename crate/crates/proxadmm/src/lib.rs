//! Smoothed proximal augmented-Lagrangian solvers for linearly constrained,
//! box-constrained programs
//!
//! ```text
//! minimize f(x)  subject to  A x = b,  l <= x <= u,
//! ```
//!
//! where f is differentiable and possibly nonconvex. The solver family covers
//! the plain inexact augmented-Lagrangian update, its proximal variant with an
//! exponentially smoothed anchor sequence (which restores convergence where
//! the plain method oscillates), a multi-block linearized variant with
//! Gauss-Seidel block sweeps, and a classic two-block ADMM baseline for
//! comparisons.
//!
//! Beyond the iterations themselves, the crate ships the measurement side:
//! inner solves for the smoothed dual and proximal value functions, a
//! potential function with propagated error bars, descent and error-bound
//! audits, stationarity certificates, KKT residuals, and convergence-rate
//! fits. Seeded instance families used in the experiment harness live in
//! [`instances`].
//!
//! Modules layer bottom-up: [`linalg`] and [`rng`] are dependency-free,
//! [`model`] defines problem data, [`auglag`] the augmented-Lagrangian
//! quantities, [`solvers`] the iterations, [`diagnostics`] the audits.

pub mod auglag;
pub mod diagnostics;
mod error;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{make_quadratic_problem, validate_problem, Problem};
pub use solvers::{run, Algorithm, IterState, SolverParams, StoppingRule};
