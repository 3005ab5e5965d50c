//! Deterministic unconstrained minimization with a multi-point globalization
//! strategy and an Armijo backtracking baseline.
//!
//! The crate is organized bottom-up: [`vec_engine`] holds the chunked,
//! thread-count invariant kernels; [`problems`] the test objectives;
//! [`ext_model`] the extended local model and its subproblem; [`ps_step`] the
//! closed-form trial step; [`solver`] the driver; [`oracle`] dense reference
//! implementations used by tests; [`bench`] the reporting layer behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod error;
pub mod ext_model;
pub mod oracle;
pub mod problems;
pub mod ps_step;
pub mod solver;
pub mod vec_engine;

pub use error::{Error, Result};
pub use problems::{by_name, Objective, PROBLEM_NAMES};
pub use solver::{solve, InitStep, SolveResult, SolverConfig, Status, Strategy};
pub use vec_engine::{ParallelPlan, Vector};
