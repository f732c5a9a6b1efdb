//! Sparse parameter selection and estimation for nonlinear least squares.
//!
//! Parameters are fitted as deviations from typical values in a min-max normalized frame.
//! [`solver::fit`] runs Levenberg–Marquardt with every step constrained to an L1 ball of
//! radius `T`, and [`selection::select`] searches for the radius that leaves a requested
//! number of parameters away from their typical values.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod l1;
pub mod metrics;
pub mod models;
pub mod params;
pub mod report;
pub mod selection;
pub mod solver;

pub use data::Dataset;
pub use error::{Error, Result};
pub use models::{ModelKind, NonlinearModel};
pub use params::{DeviationVector, ParamEntry, ParameterSpec};
pub use report::RunReport;
pub use solver::{fit, SolveResult, SolveStatus, SolverConfig};
