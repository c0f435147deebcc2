use std::ops::Range;
use std::sync::Arc;

use crate::fe::basis::p2_values;
use crate::fe::{reference_table, FeFunction, FeSpace};
use crate::mesh::geometry::{barycentric, intersect_triangles, orient, triangle_area};
use crate::mesh::{common_cells, MeshError, Point};

/// A quadrature point shared by a cell of the host space and a cell of the
/// other space.
#[derive(Debug, Clone, Copy)]
pub struct CrossPoint {
    /// Physical weight (rule weight times sub-triangle area).
    pub weight: f64,
    pub other_cell: u32,
    pub host_basis: [f64; 6],
    pub other_basis: [f64; 6],
}

/// How one host cell meets the other mesh.
#[derive(Debug, Clone)]
pub enum CellOverlay {
    /// The other mesh has the very same cell, so the reference rule applies
    /// on both sides.
    Same(u32),
    /// Points of the common refinement inside the host cell.
    Split(Range<u32>),
}

/// Quadrature on the common refinement of two meshes grown from one root
/// forest, organised by the cells of the host space.
#[derive(Debug, Clone)]
pub struct Overlay {
    host: Arc<FeSpace>,
    other: Arc<FeSpace>,
    cells: Vec<CellOverlay>,
    points: Vec<CrossPoint>,
}

fn fan_area(poly: &[Point]) -> f64 {
    (1..poly.len() - 1).map(|i| 0.5 * orient(poly[0], poly[i], poly[i + 1])).sum()
}

impl Overlay {
    pub fn new(host: &Arc<FeSpace>, other: &Arc<FeSpace>) -> Result<Self, MeshError> {
        let (f1, f2) = (host.forest(), other.forest());
        if f1.signature() != f2.signature() {
            return Err(MeshError::IncompatibleForests);
        }
        let table = reference_table();
        let rule = &table.rule;
        let mut cells = Vec::with_capacity(host.n_cells());
        let mut points = Vec::new();
        let mut current_leaf = usize::MAX;
        let mut candidates: Vec<usize> = Vec::new();
        for (c, origin) in host.mesh().provenance.iter().enumerate() {
            if origin.leaf != current_leaf {
                current_leaf = origin.leaf;
                candidates.clear();
                for piece in common_cells(f1, origin.leaf, f2)? {
                    let range = other.mesh().cells_of_leaf(piece.other_leaf);
                    candidates.extend(range);
                }
                candidates.sort_unstable();
                candidates.dedup();
            }
            let k = host.cell(c).vertices;
            if let Some(&c2) = candidates.iter().find(|&&c2| other.cell(c2).vertices == k) {
                cells.push(CellOverlay::Same(c2 as u32));
                continue;
            }
            let start = points.len() as u32;
            let area_k = host.cell(c).area;
            for &c2 in &candidates {
                let t2 = other.cell(c2).vertices;
                let poly = intersect_triangles(&k, &t2);
                if poly.len() < 3 || fan_area(&poly) <= 1e-14 * area_k {
                    continue;
                }
                for i in 1..poly.len() - 1 {
                    let sub = [poly[0], poly[i], poly[i + 1]];
                    let a = triangle_area(&sub);
                    if a <= 1e-14 * area_k {
                        continue;
                    }
                    for (l, w) in rule.points.iter().zip(&rule.weights) {
                        let x = crate::mesh::geometry::from_barycentric(&sub, *l);
                        points.push(CrossPoint {
                            weight: w * a,
                            other_cell: c2 as u32,
                            host_basis: p2_values(barycentric(&k, x)),
                            other_basis: p2_values(barycentric(&t2, x)),
                        });
                    }
                }
            }
            cells.push(CellOverlay::Split(start..points.len() as u32));
        }
        Ok(Self { host: host.clone(), other: other.clone(), cells, points })
    }

    pub fn host(&self) -> &Arc<FeSpace> {
        &self.host
    }

    pub fn other(&self) -> &Arc<FeSpace> {
        &self.other
    }

    pub fn cell(&self, c: usize) -> &CellOverlay {
        &self.cells[c]
    }

    pub fn points(&self, range: &Range<u32>) -> &[CrossPoint] {
        &self.points[range.start as usize..range.end as usize]
    }

    /// Number of host cells that are cut by the other mesh.
    pub fn split_cells(&self) -> usize {
        self.cells.iter().filter(|c| matches!(c, CellOverlay::Split(_))).count()
    }

    /// `∫ f(u_host, u_other)` over the common refinement.
    pub fn integrate(&self, u: &FeFunction, v: &FeFunction, f: impl Fn(f64, f64) -> f64) -> f64 {
        let table = reference_table();
        let dot = |a: &[f64; 6], b: &[f64; 6]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut total = 0.0;
        for (c, overlay) in self.cells.iter().enumerate() {
            let cu = u.cell_coeffs(c);
            match overlay {
                CellOverlay::Same(c2) => {
                    let cv = v.cell_coeffs(*c2 as usize);
                    let mut local = 0.0;
                    for (phi, w) in table.values.iter().zip(&table.rule.weights) {
                        local += w * f(dot(phi, &cu), dot(phi, &cv));
                    }
                    total += local * self.host.cell(c).area;
                }
                CellOverlay::Split(range) => {
                    for p in self.points(range) {
                        let cv = v.cell_coeffs(p.other_cell as usize);
                        total += p.weight * f(dot(&p.host_basis, &cu), dot(&p.other_basis, &cv));
                    }
                }
            }
        }
        total
    }
}
