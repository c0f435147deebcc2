//! Sparse symmetric systems, finite-element assembly and preconditioned
//! conjugate gradients.

mod assemble;
mod cg;
mod csr;

pub use assemble::{
    apply_dirichlet, assemble, element_contribution, mass_matrix, AssemblyOptions, AssemblyPlan, ConstantKernel,
    ElementKernel, SparseSystem,
};
pub use cg::{cg_solve, cg_solve_observed, CgOptions, CgStats};
pub use csr::CsrMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("conjugate gradients did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("matrix has a non-positive diagonal entry")]
    NonPositiveDiagonal,
    #[error("vector length does not match the system dimension")]
    DimensionMismatch,
}

#[cfg(test)]
mod tests;
