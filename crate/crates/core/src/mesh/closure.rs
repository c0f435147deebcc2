use std::io::{self, Write};
use std::ops::Range;

use super::forest::{ElementId, GeoForest, VertexId};
use super::geometry::{orient, Point};

/// Where a conforming triangle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellOrigin {
    pub leaf: ElementId,
    /// `Some(0)` / `Some(1)` for the two halves of a twin-split leaf.
    pub twin: Option<u8>,
}

/// Conforming triangulation obtained from the leaf front by splitting every
/// leaf with a hanging vertex into two twin triangles.
#[derive(Debug, Clone)]
pub struct ConformingMesh {
    pub triangles: Vec<[VertexId; 3]>,
    pub provenance: Vec<CellOrigin>,
    /// First conforming cell of each element (`u32::MAX` when not a leaf).
    first_cell: Vec<u32>,
}

const NO_CELL: u32 = u32::MAX;

impl ConformingMesh {
    /// Twin-triangle closure of the current leaf front. Leaves are visited in
    /// increasing id order; a leaf with a hanging vertex `m` on the edge
    /// opposite `vk` becomes `(vk, m, vj)` and `(m, vk, vi)`.
    pub fn build(forest: &GeoForest) -> Self {
        let mut triangles = Vec::with_capacity(forest.n_active() + forest.n_active() / 4);
        let mut provenance = Vec::with_capacity(triangles.capacity());
        let mut first_cell = vec![NO_CELL; forest.elements().len()];
        for leaf in forest.leaves() {
            first_cell[leaf] = triangles.len() as u32;
            let v = forest.element(leaf).vertices;
            match forest.hanging_vertex(leaf) {
                None => {
                    triangles.push(v);
                    provenance.push(CellOrigin { leaf, twin: None });
                }
                Some((k, m)) => {
                    let (vk, vi, vj) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
                    triangles.push([vk, m, vj]);
                    provenance.push(CellOrigin { leaf, twin: Some(0) });
                    triangles.push([m, vk, vi]);
                    provenance.push(CellOrigin { leaf, twin: Some(1) });
                }
            }
        }
        Self { triangles, provenance, first_cell }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Conforming cells covering an active leaf: one, or the two twins.
    pub fn cells_of_leaf(&self, leaf: ElementId) -> Range<usize> {
        match self.first_cell.get(leaf) {
            Some(&f) if f != NO_CELL => {
                let f = f as usize;
                let n = if self.provenance[f].twin.is_some() { 2 } else { 1 };
                f..f + n
            }
            _ => 0..0,
        }
    }

    /// The conforming cell of `leaf` containing `p` (which must lie in the leaf).
    pub fn cell_containing(&self, forest: &GeoForest, leaf: ElementId, p: Point) -> Option<usize> {
        let cells = self.cells_of_leaf(leaf);
        if cells.len() < 2 {
            return (!cells.is_empty()).then_some(cells.start);
        }
        let f = cells.start;
        // Both twins share the splitting segment formed by their first two vertices.
        let t = self.triangles[f];
        let (a, b) = (forest.vertex(t[0]), forest.vertex(t[1]));
        let s_p = orient(a, b, p);
        let s_t = orient(a, b, forest.vertex(t[2]));
        if s_p == 0.0 || s_p.signum() == s_t.signum() {
            Some(f)
        } else {
            Some(f + 1)
        }
    }

    pub fn cell_vertices(&self, forest: &GeoForest, cell: usize) -> [Point; 3] {
        self.triangles[cell].map(|v| forest.vertex(v))
    }

    /// Writes the mesh as `nv nt`, then `x y` per vertex, then `v0 v1 v2` per
    /// triangle with 0-based vertex indices compacted to the vertices in use.
    pub fn write_text<W: Write>(&self, forest: &GeoForest, mut out: W) -> io::Result<()> {
        let mut remap = vec![usize::MAX; forest.vertices().len()];
        let mut order = Vec::new();
        for t in &self.triangles {
            for &v in t {
                if remap[v] == usize::MAX {
                    remap[v] = order.len();
                    order.push(v);
                }
            }
        }
        writeln!(out, "{} {}", order.len(), self.triangles.len())?;
        for &v in &order {
            let p = forest.vertex(v);
            writeln!(out, "{:.14e} {:.14e}", p.x, p.y)?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", remap[t[0]], remap[t[1]], remap[t[2]])?;
        }
        Ok(())
    }
}
