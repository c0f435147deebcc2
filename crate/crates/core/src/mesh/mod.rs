//! Hierarchical triangle meshes.
//!
//! A [`GeoForest`] holds one quadtree of triangles per root element. The
//! active leaves form the current mesh; [`ConformingMesh`] removes hanging
//! vertices by twin splitting, and [`common_cells`] relates the leaves of two
//! forests grown from the same roots.

mod closure;
mod forest;
pub mod geometry;

pub use closure::{CellOrigin, ConformingMesh};
pub use forest::{CoarsenOutcome, EdgeKey, ElementId, GeoElement, GeoForest, RootLayout, VertexId};
pub use geometry::Point;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("element {0} is not an active leaf")]
    NotALeaf(ElementId),
    #[error("point ({0}, {1}) lies outside the mesh")]
    OutsideDomain(f64, f64),
    #[error("meshes were not grown from the same root triangulation")]
    IncompatibleForests,
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("vertex coordinates must be finite")]
    NonFiniteVertex,
    #[error("vertex index {0} out of range")]
    InvalidVertex(VertexId),
    #[error("degenerate triangle {0:?}")]
    DegenerateTriangle([VertexId; 3]),
    #[error("invalid rectangular domain")]
    InvalidDomain,
}

/// A piece of a leaf of one forest that lies inside a single leaf of another.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonCell {
    /// Leaf of the other forest containing this piece.
    pub other_leaf: ElementId,
    pub vertices: [Point; 3],
    /// The piece's vertices in barycentric coordinates of the queried leaf.
    pub barycentric: [[f64; 3]; 3],
}

/// Splits `leaf` (an active leaf of `forest`) into the leaves of `other` that
/// it contains. When `other` is finer there, these are the descendants of the
/// same tree node in `other`; when the node is a leaf in both, a single cell is
/// returned. When `other` is coarser, the single cell is `leaf` itself tagged
/// with the containing leaf of `other`.
pub fn common_cells(forest: &GeoForest, leaf: ElementId, other: &GeoForest) -> Result<Vec<CommonCell>, MeshError> {
    if forest.signature() != other.signature() {
        return Err(MeshError::IncompatibleForests);
    }
    if !forest.is_leaf(leaf) {
        return Err(MeshError::NotALeaf(leaf));
    }
    let (root, steps) = forest.path(leaf);
    let here = forest.triangle(leaf);
    let mut node = other.roots()[forest.roots().iter().position(|&r| r == root).expect("path starts at a root")];
    for &s in &steps {
        let el = other.element(node);
        if el.active {
            return Ok(vec![CommonCell {
                other_leaf: node,
                vertices: here,
                barycentric: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            }]);
        }
        node = el.children.expect("inactive node on a leaf path has children")[s as usize];
    }
    Ok(other
        .leaves_below(node)
        .into_iter()
        .map(|b| {
            let vertices = other.triangle(b);
            CommonCell {
                other_leaf: b,
                vertices,
                barycentric: vertices.map(|p| geometry::barycentric(&here, p)),
            }
        })
        .collect())
}
