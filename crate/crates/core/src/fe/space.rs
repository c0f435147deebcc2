use std::collections::HashMap;
use std::sync::Arc;

use crate::mesh::geometry::{barycentric, from_barycentric, triangle_area};
use crate::mesh::{ConformingMesh, EdgeKey, GeoForest, MeshError, Point};

use super::basis::LOCAL_EDGES;

/// Affine data of one conforming cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the three barycentric coordinates (constant on the cell).
    pub grad_lambda: [Point; 3],
}

impl CellGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let twice = 2.0 * triangle_area(&vertices);
        let grad_lambda = std::array::from_fn(|i| {
            let e = vertices[(i + 2) % 3] - vertices[(i + 1) % 3];
            Point::new(-e.y / twice, e.x / twice)
        });
        Self { vertices, area: 0.5 * twice, grad_lambda }
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        from_barycentric(&self.vertices, l)
    }

    /// Physical gradients of the shape functions from their barycentric
    /// derivatives.
    pub fn shape_gradients(&self, d: &[[f64; 3]; 6]) -> [Point; 6] {
        let g = &self.grad_lambda;
        d.map(|di| Point::new(
            di[0] * g[0].x + di[1] * g[1].x + di[2] * g[2].x,
            di[0] * g[0].y + di[1] * g[1].y + di[2] * g[2].y,
        ))
    }
}

/// Continuous P2 space on the conforming closure of a forest.
#[derive(Debug)]
pub struct FeSpace {
    forest: Arc<GeoForest>,
    mesh: ConformingMesh,
    cells: Vec<CellGeometry>,
    cell_dofs: Vec<[usize; 6]>,
    node_coords: Vec<Point>,
    boundary: Vec<bool>,
    boundary_dofs: Vec<usize>,
}

impl FeSpace {
    pub fn new(forest: Arc<GeoForest>) -> Self {
        let mesh = ConformingMesh::build(&forest);
        let mut vertex_dof = vec![usize::MAX; forest.vertices().len()];
        let mut edge_dof: HashMap<EdgeKey, (usize, u8)> = HashMap::with_capacity(3 * mesh.len());
        let mut node_coords = Vec::new();
        let mut cells = Vec::with_capacity(mesh.len());
        let mut cell_dofs = Vec::with_capacity(mesh.len());

        for tri in &mesh.triangles {
            let verts = tri.map(|v| forest.vertex(v));
            let mut dofs = [0; 6];
            for k in 0..3 {
                let slot = &mut vertex_dof[tri[k]];
                if *slot == usize::MAX {
                    *slot = node_coords.len();
                    node_coords.push(verts[k]);
                }
                dofs[k] = *slot;
            }
            for (e, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                let entry = edge_dof.entry(EdgeKey::new(tri[a], tri[b])).or_insert_with(|| {
                    node_coords.push(Point::midpoint(verts[a], verts[b]));
                    (node_coords.len() - 1, 0)
                });
                entry.1 += 1;
                dofs[3 + e] = entry.0;
            }
            cells.push(CellGeometry::new(verts));
            cell_dofs.push(dofs);
        }

        let mut boundary = vec![false; node_coords.len()];
        for (key, &(mid, count)) in &edge_dof {
            if count == 1 {
                boundary[mid] = true;
                boundary[vertex_dof[key.0]] = true;
                boundary[vertex_dof[key.1]] = true;
            }
        }
        let boundary_dofs = (0..boundary.len()).filter(|&d| boundary[d]).collect();
        Self { forest, mesh, cells, cell_dofs, node_coords, boundary, boundary_dofs }
    }

    pub fn forest(&self) -> &Arc<GeoForest> {
        &self.forest
    }

    pub fn mesh(&self) -> &ConformingMesh {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[CellGeometry] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &CellGeometry {
        &self.cells[c]
    }

    pub fn cell_dofs(&self) -> &[[usize; 6]] {
        &self.cell_dofs
    }

    pub fn dof_of(&self, cell: usize, local: usize) -> usize {
        self.cell_dofs[cell][local]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary[dof]
    }

    /// Conforming cell containing `p` and the barycentric coordinates of `p`
    /// in it.
    pub fn locate(&self, p: Point) -> Result<(usize, [f64; 3]), MeshError> {
        let (leaf, _) = self.forest.locate(p)?;
        let cell = self
            .mesh
            .cell_containing(&self.forest, leaf, p)
            .ok_or(MeshError::OutsideDomain(p.x, p.y))?;
        let mut l = barycentric(&self.cells[cell].vertices, p);
        for v in &mut l {
            *v = v.max(0.0);
        }
        let s: f64 = l.iter().sum();
        Ok((cell, l.map(|v| v / s)))
    }

    /// Sums `f(cell, point, weight)` over all quadrature points of the
    /// degree-8 rule; `weight` already includes the cell area.
    pub fn integrate<F>(&self, mut f: F) -> f64
    where
        F: FnMut(usize, usize, Point, f64) -> f64,
    {
        let table = super::basis::reference_table();
        let mut total = 0.0;
        for (c, cell) in self.cells.iter().enumerate() {
            let mut local = 0.0;
            for (q, (l, w)) in table.rule.points.iter().zip(&table.rule.weights).enumerate() {
                local += f(c, q, cell.point(*l), w * cell.area);
            }
            total += local;
        }
        total
    }
}
