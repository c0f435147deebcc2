use rayon::prelude::*;

use crate::fe::{reference_table, FeSpace};
use crate::mesh::Point;

use super::CsrMatrix;

/// Per-quadrature-point coefficients of the bilinear form
/// `∫ d ∇u·∇v + c u v` and the load `∫ f v`.
pub trait ElementKernel: Sync {
    /// Coefficient `d` of the gradient term.
    fn diffusion(&self) -> f64 {
        0.5
    }

    /// Reaction coefficient `c` at quadrature point `q` of `cell`.
    fn reaction(&self, cell: usize, q: usize, x: Point) -> f64;

    /// Load density `f` at quadrature point `q` of `cell`.
    fn source(&self, _cell: usize, _q: usize, _x: Point) -> f64 {
        0.0
    }
}

/// Matrix and right-hand side of `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Eliminate boundary dofs: unit diagonal, zero row and column, zero load.
    pub dirichlet: bool,
    /// Compute element contributions on the rayon pool. The scatter into the
    /// global matrix stays sequential, so results are bitwise identical.
    pub parallel: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { dirichlet: true, parallel: false }
    }
}

type Local = ([[f64; 6]; 6], [f64; 6]);

/// Element matrix and load vector of `cell`.
pub fn element_contribution<K: ElementKernel + ?Sized>(space: &FeSpace, kernel: &K, cell: usize) -> Local {
    let table = reference_table();
    let geo = space.cell(cell);
    let d = kernel.diffusion();
    let mut a = [[0.0; 6]; 6];
    let mut b = [0.0; 6];
    for (q, (l, w)) in table.rule.points.iter().zip(&table.rule.weights).enumerate() {
        let x = geo.point(*l);
        let wq = w * geo.area;
        let c = kernel.reaction(cell, q, x);
        let f = kernel.source(cell, q, x);
        let phi = &table.values[q];
        let grads = if d != 0.0 { Some(geo.shape_gradients(&table.derivatives[q])) } else { None };
        for i in 0..6 {
            b[i] += wq * f * phi[i];
            for j in i..6 {
                let mut v = c * phi[i] * phi[j];
                if let Some(g) = &grads {
                    v += d * g[i].dot(g[j]);
                }
                a[i][j] += wq * v;
            }
        }
    }
    for i in 0..6 {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    (a, b)
}

fn local_contributions<K: ElementKernel + ?Sized>(space: &FeSpace, kernel: &K, parallel: bool) -> Vec<Local> {
    if parallel {
        (0..space.n_cells()).into_par_iter().map(|c| element_contribution(space, kernel, c)).collect()
    } else {
        (0..space.n_cells()).map(|c| element_contribution(space, kernel, c)).collect()
    }
}

/// Assembles through a sorted triplet list.
pub fn assemble<K: ElementKernel + ?Sized>(space: &FeSpace, kernel: &K, options: AssemblyOptions) -> SparseSystem {
    let n = space.n_dofs();
    let locals = local_contributions(space, kernel, options.parallel);
    let mut triplets = Vec::with_capacity(36 * locals.len());
    let mut rhs = vec![0.0; n];
    for (dofs, (a, b)) in space.cell_dofs().iter().zip(&locals) {
        for i in 0..6 {
            rhs[dofs[i]] += b[i];
            for j in 0..6 {
                triplets.push((dofs[i], dofs[j], a[i][j]));
            }
        }
    }
    let mut system = SparseSystem { matrix: CsrMatrix::from_triplets(n, triplets), rhs };
    if options.dirichlet {
        apply_dirichlet(space, &mut system);
    }
    system
}

/// Symmetric elimination of the boundary dofs.
pub fn apply_dirichlet(space: &FeSpace, system: &mut SparseSystem) {
    let m = &mut system.matrix;
    for i in 0..m.n {
        let bi = space.is_boundary(i);
        for k in m.row_offsets[i]..m.row_offsets[i + 1] {
            let j = m.col_indices[k];
            if bi || space.is_boundary(j) {
                m.values[k] = if i == j { 1.0 } else { 0.0 };
            }
        }
        if bi {
            system.rhs[i] = 0.0;
        }
    }
}

/// Fixed sparsity pattern of a space with precomputed scatter positions, for
/// repeated assembly on an unchanged mesh.
#[derive(Debug, Clone)]
pub struct AssemblyPlan {
    pattern: CsrMatrix,
    scatter: Vec<[u32; 36]>,
}

impl AssemblyPlan {
    pub fn new(space: &FeSpace) -> Self {
        let n = space.n_dofs();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in space.cell_dofs() {
            for &i in dofs {
                rows[i].extend_from_slice(dofs);
            }
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            col_indices.extend_from_slice(r);
            row_offsets.push(col_indices.len());
        }
        let nnz = col_indices.len();
        let pattern = CsrMatrix { n, row_offsets, col_indices, values: vec![0.0; nnz] };
        let scatter = space
            .cell_dofs()
            .iter()
            .map(|dofs| {
                let mut s = [0u32; 36];
                for i in 0..6 {
                    for j in 0..6 {
                        s[6 * i + j] = pattern.position(dofs[i], dofs[j]).expect("pattern covers cell couplings") as u32;
                    }
                }
                s
            })
            .collect();
        Self { pattern, scatter }
    }

    /// Zero matrix with this plan's pattern.
    pub fn zero_matrix(&self) -> CsrMatrix {
        self.pattern.clone()
    }

    /// Adds one element matrix into `matrix`, which must share this pattern.
    #[inline]
    pub fn add_local(&self, matrix: &mut CsrMatrix, cell: usize, a: &[[f64; 6]; 6]) {
        let s = &self.scatter[cell];
        for i in 0..6 {
            for j in 0..6 {
                matrix.values[s[6 * i + j] as usize] += a[i][j];
            }
        }
    }

    /// Same result as [`assemble`] up to summation order of duplicates.
    pub fn assemble<K: ElementKernel + ?Sized>(&self, space: &FeSpace, kernel: &K, options: AssemblyOptions) -> SparseSystem {
        let mut matrix = self.zero_matrix();
        let mut rhs = vec![0.0; space.n_dofs()];
        let locals = local_contributions(space, kernel, options.parallel);
        for (c, (dofs, (a, b))) in space.cell_dofs().iter().zip(&locals).enumerate() {
            self.add_local(&mut matrix, c, a);
            for i in 0..6 {
                rhs[dofs[i]] += b[i];
            }
        }
        let mut system = SparseSystem { matrix, rhs };
        if options.dirichlet {
            apply_dirichlet(space, &mut system);
        }
        system
    }
}

/// Kernel with constant reaction and no load.
#[derive(Debug, Clone, Copy)]
pub struct ConstantKernel {
    pub diffusion: f64,
    pub reaction: f64,
}

impl ElementKernel for ConstantKernel {
    fn diffusion(&self) -> f64 {
        self.diffusion
    }

    fn reaction(&self, _: usize, _: usize, _: Point) -> f64 {
        self.reaction
    }
}

/// Consistent mass matrix without boundary elimination.
pub fn mass_matrix(space: &FeSpace) -> CsrMatrix {
    let kernel = ConstantKernel { diffusion: 0.0, reaction: 1.0 };
    AssemblyPlan::new(space).assemble(space, &kernel, AssemblyOptions { dirichlet: false, parallel: false }).matrix
}
