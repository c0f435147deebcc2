//! Flux-jump error indicators and refine/coarsen marking.

use std::collections::{BTreeSet, HashMap};

use crate::fe::basis::{p2_barycentric_derivatives, LOCAL_EDGES};
use crate::fe::{gauss_legendre_5, FeFunction, FeSpace};
use crate::mesh::{ElementId, GeoForest, MeshError, Point};

/// Error indicator values on one space.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    /// One value per conforming cell.
    pub cells: Vec<f64>,
    /// One value per active leaf, in leaf-id order. Twin halves are combined
    /// as `sqrt(a² + b²)`.
    pub leaves: Vec<(ElementId, f64)>,
    pub max: f64,
    /// `sqrt(Σ η_K²)` over leaves.
    pub total: f64,
}

/// Jump indicator `η_K = (Σ_E ½ h_E Σ_l ‖[∇u_l]·n‖²_E)^{1/2}` summed over the
/// given functions, all of which must live on `space`. Boundary edges
/// contribute nothing.
pub fn compute_indicator(space: &FeSpace, states: &[&FeFunction]) -> IndicatorField {
    for s in states {
        assert!(std::ptr::eq(s.space().as_ref(), space), "all states must live on the indicator's space");
    }
    let (gx, gw) = gauss_legendre_5();
    let mut sq = vec![0.0; space.n_cells()];

    // every edge owns exactly one midpoint dof
    let mut first_side: HashMap<usize, (usize, usize)> = HashMap::with_capacity(2 * space.n_cells());
    for (c, dofs) in space.cell_dofs().iter().enumerate() {
        for e in 0..3 {
            let Some((k, ek)) = first_side.remove(&dofs[3 + e]) else {
                first_side.insert(dofs[3 + e], (c, e));
                continue;
            };
            let (a, b) = LOCAL_EDGES[ek];
            let kd = space.cell_dofs()[k];
            let pa = space.cell(k).vertices[a];
            let pb = space.cell(k).vertices[b];
            let len = pa.distance(pb);
            let t = pb - pa;
            let normal = Point::new(t.y / len, -t.x / len);
            let (ja, jb) = LOCAL_EDGES[e];
            let reversed = dofs[ja] != kd[a];
            debug_assert!(if reversed { dofs[jb] == kd[a] } else { dofs[jb] == kd[b] });

            let mut integral = 0.0;
            for (s, w) in gx.iter().zip(&gw) {
                let mut lk = [0.0; 3];
                lk[a] = 1.0 - s;
                lk[b] = *s;
                let sj = if reversed { 1.0 - s } else { *s };
                let mut lj = [0.0; 3];
                lj[ja] = 1.0 - sj;
                lj[jb] = sj;
                let gk = space.cell(k).shape_gradients(&p2_barycentric_derivatives(lk));
                let gj = space.cell(c).shape_gradients(&p2_barycentric_derivatives(lj));
                for u in states {
                    let (uk, uj) = (u.cell_coeffs(k), u.cell_coeffs(c));
                    let mut jump = 0.0;
                    for i in 0..6 {
                        jump += uk[i] * gk[i].dot(normal) - uj[i] * gj[i].dot(normal);
                    }
                    integral += w * jump * jump;
                }
            }
            let contribution = 0.5 * len * integral * len;
            sq[k] += contribution;
            sq[c] += contribution;
        }
    }

    let forest = space.forest();
    let mesh = space.mesh();
    let leaves: Vec<(ElementId, f64)> = forest
        .leaves()
        .map(|l| (l, mesh.cells_of_leaf(l).map(|c| sq[c]).sum::<f64>().sqrt()))
        .collect();
    let max = leaves.iter().fold(0.0f64, |m, &(_, v)| m.max(v));
    let total = leaves.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
    IndicatorField { cells: sq.into_iter().map(f64::sqrt).collect(), leaves, max, total }
}

/// Leaves to refine and parents whose four children should be merged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Marks {
    pub refine: Vec<ElementId>,
    pub coarsen: Vec<ElementId>,
}

/// Rough number of dofs added by quadrisecting one leaf.
pub const DOFS_PER_REFINEMENT: usize = 6;

/// Maximum strategy. Leaves with `η ≥ α_r·max` are refined, largest first,
/// while `current_dofs + 6·count` stays within `max_dofs`. Complete sibling
/// quadruples with every `η ≤ α_c·max` are coarsened.
pub fn mark(
    forest: &GeoForest,
    indicator: &IndicatorField,
    refine_frac: f64,
    coarsen_frac: f64,
    max_dofs: usize,
    current_dofs: usize,
) -> Marks {
    let max = indicator.max;
    if max <= 0.0 || !max.is_finite() {
        return Marks::default();
    }
    let mut candidates: Vec<(ElementId, f64)> =
        indicator.leaves.iter().copied().filter(|&(_, v)| v >= refine_frac * max).collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let budget = max_dofs.saturating_sub(current_dofs) / DOFS_PER_REFINEMENT;
    candidates.truncate(budget);
    let mut refine: Vec<ElementId> = candidates.into_iter().map(|(l, _)| l).collect();
    refine.sort_unstable();

    let value: HashMap<ElementId, f64> = indicator.leaves.iter().copied().collect();
    let low = |l: ElementId| value.get(&l).is_some_and(|&v| v <= coarsen_frac * max);
    let mut coarsen = BTreeSet::new();
    for &(leaf, _) in &indicator.leaves {
        let Some(parent) = forest.element(leaf).parent else { continue };
        let Some(children) = forest.element(parent).children else { continue };
        if children.iter().all(|&c| forest.is_leaf(c) && low(c) && refine.binary_search(&c).is_err()) {
            coarsen.insert(parent);
        }
    }
    Marks { refine, coarsen: coarsen.into_iter().collect() }
}

type TriangleKey = [(u64, u64); 3];

fn triangle_key(t: [Point; 3]) -> TriangleKey {
    let mut k = t.map(|p| ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits()));
    k.sort_unstable();
    k
}

/// Closes `marks` under a mesh symmetry: mirror images of refined leaves are
/// refined too, and a quadruple is coarsened only if its mirror image is.
/// Elements are matched by exact vertex coordinates, so this is meaningful
/// for meshes whose coordinates mirror bitwise.
pub fn mirror_closed_marks(forest: &GeoForest, marks: &Marks, mirror: impl Fn(Point) -> Point) -> Marks {
    let image = |id: ElementId| triangle_key(forest.triangle(id).map(&mirror));
    let leaves: HashMap<TriangleKey, ElementId> = forest.leaves().map(|l| (triangle_key(forest.triangle(l)), l)).collect();
    let mut refine: BTreeSet<ElementId> = marks.refine.iter().copied().collect();
    for &l in &marks.refine {
        if let Some(&m) = leaves.get(&image(l)) {
            refine.insert(m);
        }
    }
    let parents: BTreeSet<TriangleKey> = marks.coarsen.iter().map(|&p| triangle_key(forest.triangle(p))).collect();
    let coarsen = marks.coarsen.iter().copied().filter(|&p| parents.contains(&image(p))).collect();
    Marks { refine: refine.into_iter().collect(), coarsen }
}

/// Counts of an applied adaptation step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdaptCounts {
    pub refined: usize,
    pub coarsened: usize,
}

/// Applies `marks` to a copy of `forest`: coarsening first, then refinement
/// of the marked leaves that survived it.
pub fn apply_marks(forest: &GeoForest, marks: &Marks) -> Result<(GeoForest, AdaptCounts), MeshError> {
    let mut next = forest.clone();
    let children: Vec<ElementId> = marks
        .coarsen
        .iter()
        .filter_map(|&p| forest.element(p).children)
        .flatten()
        .collect();
    let outcome = next.coarsen(&children);
    let still: Vec<ElementId> = marks.refine.iter().copied().filter(|&l| next.is_leaf(l)).collect();
    next.refine(&still)?;
    Ok((next, AdaptCounts { refined: still.len(), coarsened: outcome.coarsened.len() }))
}

#[cfg(test)]
mod tests;
