//! Grid finite-difference operators, sparse matrices and their adjoints.

mod grid;
pub mod io;
mod linear;
mod sparse;

pub use grid::{div2d, grad2d, weighted_grad, Field2D, Grid2D};
pub use linear::{LinearOperator, NORM_DEFAULT_ITERS, NORM_DEFAULT_TOL, NORM_SAFETY};
pub use sparse::SparseMatrix;

pub(crate) use linear::{dot, norm};
