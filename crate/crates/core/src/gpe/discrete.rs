use std::sync::Arc;

use rayon::prelude::*;

use crate::fe::{reference_table, FeFunction, FeSpace};
use crate::linalg::{cg_solve, AssemblyOptions, AssemblyPlan, CgOptions, CgStats, CsrMatrix, ElementKernel, SparseSystem};
use crate::mesh::Point;

use super::{GpeError, PotentialSpec};

const NQ: usize = 16;

/// Values of a function at the 16 quadrature points of every cell.
pub type QuadValues = Vec<[f64; NQ]>;

/// Symmetric 6x6 element matrix in packed upper-triangular order.
pub type PackedLocal = [f64; 21];

fn pair_index() -> [(usize, usize); 21] {
    let mut out = [(0, 0); 21];
    let mut k = 0;
    for i in 0..6 {
        for j in i..6 {
            out[k] = (i, j);
            k += 1;
        }
    }
    out
}

/// `φ_a φ_b` at each quadrature point, packed.
fn basis_products() -> [[f64; 21]; NQ] {
    let table = reference_table();
    let pairs = pair_index();
    let mut out = [[0.0; 21]; NQ];
    for (q, row) in out.iter_mut().enumerate() {
        for (k, &(i, j)) in pairs.iter().enumerate() {
            row[k] = table.values[q][i] * table.values[q][j];
        }
    }
    out
}

struct Static<'a> {
    potential: &'a PotentialSpec,
    reaction_shift: f64,
}

impl ElementKernel for Static<'_> {
    fn reaction(&self, _: usize, _: usize, x: Point) -> f64 {
        self.potential.eval(x) + self.reaction_shift
    }
}

/// Matrices of one component on a fixed mesh, reused across time steps.
#[derive(Debug)]
pub struct Discretization {
    space: Arc<FeSpace>,
    plan: AssemblyPlan,
    mass: CsrMatrix,
    /// `½K + M_V`
    hamiltonian: CsrMatrix,
    /// `½K + M_V + M/Δt`
    base: CsrMatrix,
    dirichlet: Vec<(usize, f64)>,
    products: [[f64; 21]; NQ],
    dt: f64,
    parallel: bool,
}

/// In-place constraint applied to the coefficients after each solve.
pub type Projection<'a> = &'a dyn Fn(&mut [f64]);

/// Result of one imaginary-time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub psi: FeFunction,
    /// `‖Ψⁿ⁺¹ − Ψⁿ‖∞ / Δt`
    pub residual: f64,
    pub cg: CgStats,
}

/// Integrals entering the energy of one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `∫ ½|∇ψ|² + Vψ²`
    pub quadratic: f64,
    /// `∫ ψ⁴`
    pub quartic: f64,
    /// `∫ ψ²`
    pub mass: f64,
}

impl Discretization {
    pub fn new(space: Arc<FeSpace>, potential: &PotentialSpec, dt: f64, parallel: bool) -> Self {
        let plan = AssemblyPlan::new(&space);
        let raw = AssemblyOptions { dirichlet: false, parallel };
        let hamiltonian = plan.assemble(&space, &Static { potential, reaction_shift: 0.0 }, raw).matrix;
        let mass = crate::linalg::mass_matrix(&space);
        let mut base = hamiltonian.clone();
        for (b, m) in base.values_mut().iter_mut().zip(mass.values()) {
            *b += m / dt;
        }
        let mut dirichlet = Vec::new();
        let (offsets, cols) = (base.row_offsets(), base.col_indices());
        for i in 0..base.n() {
            let bi = space.is_boundary(i);
            for k in offsets[i]..offsets[i + 1] {
                let j = cols[k];
                if bi || space.is_boundary(j) {
                    dirichlet.push((k, if i == j { 1.0 } else { 0.0 }));
                }
            }
        }
        Self { space, plan, mass, hamiltonian, base, dirichlet, products: basis_products(), dt, parallel }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mass_matrix(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn hamiltonian(&self) -> &CsrMatrix {
        &self.hamiltonian
    }

    pub fn parallel(&self) -> bool {
        self.parallel
    }

    pub fn plan(&self) -> &AssemblyPlan {
        &self.plan
    }

    pub fn quad_values(&self, u: &FeFunction) -> QuadValues {
        let table = reference_table();
        let eval = |c: usize| {
            let cu = u.cell_coeffs(c);
            let mut out = [0.0; NQ];
            for (q, phi) in table.values.iter().enumerate() {
                out[q] = (0..6).map(|a| phi[a] * cu[a]).sum();
            }
            out
        };
        if self.parallel {
            (0..self.space.n_cells()).into_par_iter().map(eval).collect()
        } else {
            (0..self.space.n_cells()).map(eval).collect()
        }
    }

    /// `Σ_q w_q c_q φ_a φ_b` over the quadrature points of `cell`.
    pub fn weighted_mass(&self, cell: usize, coeff: &[f64; NQ]) -> PackedLocal {
        let table = reference_table();
        let area = self.space.cell(cell).area;
        let mut local = [0.0; 21];
        for q in 0..NQ {
            let c = coeff[q] * table.rule.weights[q] * area;
            for (l, p) in local.iter_mut().zip(&self.products[q]) {
                *l += c * p;
            }
        }
        local
    }

    fn scatter_packed(&self, matrix: &mut CsrMatrix, cell: usize, local: &PackedLocal) {
        let mut full = [[0.0; 6]; 6];
        for (k, &(i, j)) in pair_index().iter().enumerate() {
            full[i][j] = local[k];
            full[j][i] = local[k];
        }
        self.plan.add_local(matrix, cell, &full);
    }

    /// Builds `A = ½K + M_{V + 1/Δt} + M_c` where the extra reaction term is
    /// given per cell as a packed local matrix, then eliminates the boundary.
    pub fn system<F>(&self, rhs: Vec<f64>, extra: F) -> SparseSystem
    where
        F: Fn(usize) -> PackedLocal + Sync,
    {
        let mut matrix = self.base.clone();
        if self.parallel {
            let locals: Vec<PackedLocal> = (0..self.space.n_cells()).into_par_iter().map(&extra).collect();
            for (c, local) in locals.iter().enumerate() {
                self.scatter_packed(&mut matrix, c, local);
            }
        } else {
            for c in 0..self.space.n_cells() {
                self.scatter_packed(&mut matrix, c, &extra(c));
            }
        }
        let values = matrix.values_mut();
        for &(k, v) in &self.dirichlet {
            values[k] = v;
        }
        let mut rhs = rhs;
        for &d in self.space.boundary_dofs() {
            rhs[d] = 0.0;
        }
        SparseSystem { matrix, rhs }
    }

    /// One backward-Euler step with reaction `V + coupling + 1/Δt`, where the
    /// nonlinear/coupling reaction is supplied as per-cell local matrices,
    /// followed by projection and renormalization to `target_mass`.
    pub fn step_with<F>(
        &self,
        psi: &FeFunction,
        extra: F,
        target_mass: f64,
        cg: CgOptions,
        project: Option<Projection<'_>>,
    ) -> Result<StepOutcome, GpeError>
    where
        F: Fn(usize) -> PackedLocal + Sync,
    {
        let mut rhs = self.mass.mul_vec(psi.coeffs());
        for r in &mut rhs {
            *r /= self.dt;
        }
        let system = self.system(rhs, extra);
        let mut x = psi.coeffs().to_vec();
        let stats = cg_solve(&system, &mut x, cg)?;
        if let Some(p) = project {
            p(&mut x);
        }
        let m = self.mass.quadratic_form(&x);
        if !(m > 0.0) || !m.is_finite() {
            return Err(GpeError::ZeroState);
        }
        let s = (target_mass / m).sqrt();
        for v in &mut x {
            *v *= s;
        }
        let residual = x.iter().zip(psi.coeffs()).fold(0.0f64, |r, (a, b)| r.max((a - b).abs())) / self.dt;
        let psi = FeFunction::new(Arc::clone(&self.space), x)?;
        Ok(StepOutcome { psi, residual, cg: stats })
    }

    /// Single-component step with the `β|ψⁿ|²` reaction.
    pub fn step(&self, psi: &FeFunction, beta: f64, cg: CgOptions) -> Result<StepOutcome, GpeError> {
        let uq = self.quad_values(psi);
        self.step_with(psi, |c| self.weighted_mass(c, &uq[c].map(|v| beta * v * v)), 1.0, cg, None)
    }

    pub fn energy_parts(&self, psi: &FeFunction) -> EnergyParts {
        self.energy_parts_with(psi, &self.quad_values(psi))
    }

    pub fn energy_parts_with(&self, psi: &FeFunction, uq: &QuadValues) -> EnergyParts {
        let table = reference_table();
        let mut quartic = 0.0;
        for (c, vals) in uq.iter().enumerate() {
            let mut local = 0.0;
            for (v, w) in vals.iter().zip(&table.rule.weights) {
                local += w * v.powi(4);
            }
            quartic += local * self.space.cell(c).area;
        }
        EnergyParts {
            quadratic: self.hamiltonian.quadratic_form(psi.coeffs()),
            quartic,
            mass: self.mass.quadratic_form(psi.coeffs()),
        }
    }
}

/// `E = ∫ ½|∇ψ|² + V|ψ|² + (β/2)|ψ|⁴` by direct quadrature.
pub fn energy(psi: &FeFunction, potential: &PotentialSpec, beta: f64) -> f64 {
    let (quadratic, quartic) = direct_parts(psi, potential);
    quadratic + 0.5 * beta * quartic
}

/// `μ = E + (β/2)∫|ψ|⁴` with the same quadrature as [`energy`].
pub fn chemical_potential(psi: &FeFunction, potential: &PotentialSpec, beta: f64) -> f64 {
    let (quadratic, quartic) = direct_parts(psi, potential);
    quadratic + 0.5 * beta * quartic + 0.5 * beta * quartic
}

fn direct_parts(psi: &FeFunction, potential: &PotentialSpec) -> (f64, f64) {
    let table = reference_table();
    let space = psi.space();
    let mut quadratic = 0.0;
    let mut quartic = 0.0;
    for c in 0..space.n_cells() {
        let geo = space.cell(c);
        let (mut a, mut b) = (0.0, 0.0);
        for (l, w) in table.rule.points.iter().zip(&table.rule.weights) {
            let (v, g) = psi.eval_in_cell(c, *l);
            let v2 = v * v;
            a += w * (0.5 * g.dot(g) + potential.eval(geo.point(*l)) * v2);
            b += w * v2 * v2;
        }
        quadratic += a * geo.area;
        quartic += b * geo.area;
    }
    (quadratic, quartic)
}
