//! Inverse linear optimization over an ensemble of observed decisions.
//!
//! Given a feasible region `P = {x : Ax ≥ b}` and observed points, the
//! solvers impute a cost vector `c` (with a dual certificate `y`) that makes
//! the points as close to optimal as possible under one of three losses, and
//! the `gof` module scores the fit with the coefficient of complementarity ρ.

pub mod adg;
pub mod branches;
pub mod dsp;
pub mod error;
pub mod geometry;
pub mod gof;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod rdg;
pub mod structured;
pub mod tol;

pub use error::{Error, Result};
