//! Primal-dual hybrid gradient methods with non-diagonal preconditioners and
//! inexact (fixed inner iteration) dual subproblem solves.

pub mod error;
pub mod operators;
pub mod precond;
pub mod problems;
pub mod prox;
pub mod solver;
pub mod validation;

pub use error::{Error, Result};
