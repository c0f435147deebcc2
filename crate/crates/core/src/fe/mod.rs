//! Continuous quadratic Lagrange elements on the conforming closure of a
//! [`GeoForest`](crate::mesh::GeoForest).

pub mod basis;
mod function;
pub mod quadrature;
mod space;

pub use basis::{p2_basis, reference_table, ReferenceTable};
pub use function::FeFunction;
pub use quadrature::{gauss_legendre_5, QuadratureRule};
pub use space::{CellGeometry, FeSpace};

use thiserror::Error;

use crate::mesh::MeshError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeError {
    #[error("no quadrature rule of degree {0}")]
    UnsupportedQuadrature(usize),
    #[error("coefficient vector has length {got}, space has {expected} dofs")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[cfg(test)]
mod tests;
