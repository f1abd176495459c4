//! RCMAES: an active CMA-ES with a dimension-dependent nonlinear population
//! schedule and restarts that avoid previously converged regions.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: bounds, budgets, the objective contract, run records and the
//!   seeded random stream every run owns.
//! - [`linalg`]: symmetric eigendecomposition (cyclic Jacobi) and
//!   multivariate-normal sampling.
//! - [`cma`]: one generation-stepped (active) CMA-ES instance.
//! - [`rcmaes`]: the restart controller, population schedule, bound repair
//!   and the two baseline restart policies.
//! - [`suite`]: a seeded CEC-style benchmark generator with a text file format.
//! - [`stats`]: Friedman ranks, Mann–Whitney win/tie/loss and bounded
//!   relative-error accuracy.

pub mod cma;
pub mod error;
pub mod linalg;
pub mod model;
pub mod rcmaes;
pub mod stats;
pub mod suite;

pub use error::{Error, Result};
pub use model::{Bounds, Budget, FnObjective, Objective, RngStream, RunResult};
