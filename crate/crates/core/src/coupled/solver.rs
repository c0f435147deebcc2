use std::sync::Arc;

use rayon::prelude::*;

use crate::estimator::{apply_marks, compute_indicator, mark, Marks};
use crate::fe::{reference_table, FeFunction, FeSpace};
use crate::gpe::{
    gaussian_guess, normalize, Discretization, GpeConfig, GpeError, HistoryRecord, PackedLocal, PotentialSpec,
    StopReason,
};
use crate::mesh::GeoForest;

use super::overlay::{CellOverlay, Overlay};
use super::{ComponentError, MeshMode};

/// Order in which the two components are advanced within one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    /// The second component already sees the updated first component.
    #[default]
    GaussSeidel,
    /// Both components use the previous step only.
    Jacobi,
}

/// Parameters of a two-component run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledConfig {
    pub potentials: [PotentialSpec; 2],
    /// `coupling[i][k]` multiplies `|ψ_k|²` in the equation for `ψ_i`.
    pub coupling: [[f64; 2]; 2],
    /// Target `∫ ψ_i²`.
    pub particles: [f64; 2],
    /// Time step, tolerances and adaptation controls shared by both
    /// components. `beta` is unused here.
    pub solver: GpeConfig,
    pub order: UpdateOrder,
}

impl CoupledConfig {
    pub fn validate(&self) -> Result<(), GpeError> {
        let solver = GpeConfig { beta: 0.0, ..self.solver.clone() };
        solver.validate()?;
        for p in &self.potentials {
            p.validate()?;
        }
        if !self.particles.iter().all(|&n| n > 0.0 && n.is_finite()) {
            return Err(GpeError::InvalidParameter("particle numbers must be positive".into()));
        }
        if !self.coupling.iter().flatten().all(|&v| v >= 0.0 && v.is_finite()) {
            return Err(GpeError::InvalidParameter("coupling constants must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn tag(component: usize) -> impl Fn(GpeError) -> ComponentError {
        move |source| ComponentError { component, source }
    }
}

/// Energies of a coupled state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledEnergy {
    /// `E₁ + E₂ + V₁₂ ∫ ψ₁²ψ₂²`
    pub total: f64,
    /// `∫ ½|∇ψ_i|² + U_i ψ_i² + (V_ii/2) ψ_i⁴`
    pub components: [f64; 2],
    /// `∫ ψ₁² ψ₂²`
    pub overlap: f64,
    /// Per-particle chemical potentials.
    pub mu: [f64; 2],
    /// `N₁μ₁ + N₂μ₂`
    pub mu_total: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledState {
    pub psi: [FeFunction; 2],
}

/// Cross-mesh reaction term `Σ_q w_q V |ψ_other(x_q)|² φ_a(x_q) φ_b(x_q)` for
/// every cell of `host`, evaluated on the common refinement described by
/// `overlay`.
pub fn cross_mass_contribution(
    host: &Discretization,
    overlay: &Overlay,
    other: &FeFunction,
    coupling: f64,
) -> Vec<PackedLocal> {
    let n = host.space().n_cells();
    if coupling == 0.0 {
        return vec![[0.0; 21]; n];
    }
    let table = reference_table();
    let dot = |a: &[f64; 6], b: &[f64; 6]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let local = |c: usize| match overlay.cell(c) {
        CellOverlay::Same(c2) => {
            let cv = other.cell_coeffs(*c2 as usize);
            let mut coeff = [0.0; 16];
            for (q, phi) in table.values.iter().enumerate() {
                let v = dot(phi, &cv);
                coeff[q] = coupling * v * v;
            }
            host.weighted_mass(c, &coeff)
        }
        CellOverlay::Split(range) => {
            let mut out = [0.0; 21];
            for p in overlay.points(range) {
                let v = dot(&p.other_basis, &other.cell_coeffs(p.other_cell as usize));
                let s = p.weight * coupling * v * v;
                let mut k = 0;
                for a in 0..6 {
                    let sa = s * p.host_basis[a];
                    for b in a..6 {
                        out[k] += sa * p.host_basis[b];
                        k += 1;
                    }
                }
            }
            out
        }
    };
    if host.parallel() {
        (0..n).into_par_iter().map(local).collect()
    } else {
        (0..n).map(local).collect()
    }
}

/// Matrices of both components on their current meshes together with the
/// overlays in both directions.
#[derive(Debug)]
pub struct CoupledSystem {
    discs: [Discretization; 2],
    /// `overlays[i]` is hosted by component `i`'s space.
    overlays: [Overlay; 2],
}

impl CoupledSystem {
    pub fn new(spaces: [Arc<FeSpace>; 2], config: &CoupledConfig) -> Result<Self, GpeError> {
        let s = &config.solver;
        let [a, b] = spaces;
        let overlays = [Overlay::new(&a, &b)?, Overlay::new(&b, &a)?];
        let discs = [
            Discretization::new(a, &config.potentials[0], s.dt, s.parallel),
            Discretization::new(b, &config.potentials[1], s.dt, s.parallel),
        ];
        Ok(Self { discs, overlays })
    }

    pub fn discretization(&self, i: usize) -> &Discretization {
        &self.discs[i]
    }

    pub fn overlay(&self, i: usize) -> &Overlay {
        &self.overlays[i]
    }

    /// Backward-Euler update of component `i` against `other`, normalized to
    /// `N_i`. The residual is measured on `ψ_i / √N_i`.
    fn advance(
        &self,
        i: usize,
        psi: &FeFunction,
        other: &FeFunction,
        config: &CoupledConfig,
    ) -> Result<(FeFunction, f64), ComponentError> {
        let disc = &self.discs[i];
        let self_coupling = config.coupling[i][i];
        let uq = disc.quad_values(psi);
        let cross = cross_mass_contribution(disc, &self.overlays[i], other, config.coupling[i][1 - i]);
        let extra = |c: usize| {
            let mut m = disc.weighted_mass(c, &uq[c].map(|v| self_coupling * v * v));
            for (a, b) in m.iter_mut().zip(&cross[c]) {
                *a += b;
            }
            m
        };
        let n = config.particles[i];
        let out = disc
            .step_with(psi, extra, n, config.solver.cg_options(), None)
            .map_err(CoupledConfig::tag(i))?;
        Ok((out.psi, out.residual / n.sqrt()))
    }

    /// One coupled time step.
    pub fn step(&self, state: &CoupledState, config: &CoupledConfig) -> Result<(CoupledState, [f64; 2]), ComponentError> {
        let [p1, p2] = &state.psi;
        let (n1, r1) = self.advance(0, p1, p2, config)?;
        let partner = match config.order {
            UpdateOrder::GaussSeidel => &n1,
            UpdateOrder::Jacobi => p1,
        };
        let (n2, r2) = self.advance(1, p2, partner, config)?;
        Ok((CoupledState { psi: [n1, n2] }, [r1, r2]))
    }

    pub fn energy(&self, state: &CoupledState, config: &CoupledConfig) -> CoupledEnergy {
        let [p1, p2] = &state.psi;
        let parts = [self.discs[0].energy_parts(p1), self.discs[1].energy_parts(p2)];
        let overlap = self.overlays[0].integrate(p1, p2, |a, b| a * a * b * b);
        let v = &config.coupling;
        let components = [0, 1].map(|i| parts[i].quadratic + 0.5 * v[i][i] * parts[i].quartic);
        let cross = 0.5 * (v[0][1] + v[1][0]) * overlap;
        let mu_scaled = [0, 1].map(|i| parts[i].quadratic + v[i][i] * parts[i].quartic + v[i][1 - i] * overlap);
        CoupledEnergy {
            total: components[0] + components[1] + cross,
            components,
            overlap,
            mu: [0, 1].map(|i| mu_scaled[i] / config.particles[i]),
            mu_total: mu_scaled[0] + mu_scaled[1],
        }
    }
}

/// Summary of one outer cycle of a coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledCycle {
    pub cycle: usize,
    pub dofs: [usize; 2],
    pub steps: usize,
    pub converged: bool,
    pub energy: CoupledEnergy,
    pub refined: [usize; 2],
    pub coarsened: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub forests: [Arc<GeoForest>; 2],
    pub state: CoupledState,
    pub energy: CoupledEnergy,
    pub dofs: [usize; 2],
    pub steps: usize,
    pub cycles: Vec<CoupledCycle>,
    pub stop: StopReason,
}

fn union_marks(a: &Marks, b: &Marks) -> Marks {
    let mut refine: Vec<_> = a.refine.iter().chain(&b.refine).copied().collect();
    refine.sort_unstable();
    refine.dedup();
    let coarsen = a
        .coarsen
        .iter()
        .copied()
        .filter(|p| b.coarsen.binary_search(p).is_ok())
        .collect();
    Marks { refine, coarsen }
}

fn adapt(forest: &GeoForest, marks: &Marks) -> Result<(GeoForest, usize, usize), GpeError> {
    let (next, counts) = apply_marks(forest, marks)?;
    Ok((next, counts.refined, counts.coarsened))
}

/// Adaptive imaginary-time loop for the coupled pair. Both meshes start from
/// `forest`; in multi-mesh mode each one then follows its own component's
/// indicator, in single-mesh mode both follow the union of the two mark sets.
/// The outer loop stops once the total energy per particle changes by at
/// most `tol_energy` between cycles.
pub fn run_coupled(
    forest: GeoForest,
    config: &CoupledConfig,
    mode: MeshMode,
    observer: &mut dyn FnMut(&HistoryRecord),
) -> Result<CoupledRun, ComponentError> {
    config.validate().map_err(CoupledConfig::tag(0))?;
    let sc = &config.solver;
    let total_particles = config.particles[0] + config.particles[1];
    let mut forests = [Arc::new(forest.clone()), Arc::new(forest)];
    if mode == MeshMode::SingleMesh {
        forests[1] = forests[0].clone();
    }
    let spaces = |f: &[Arc<GeoForest>; 2]| {
        let a = Arc::new(FeSpace::new(f[0].clone()));
        let b = if Arc::ptr_eq(&f[0], &f[1]) { a.clone() } else { Arc::new(FeSpace::new(f[1].clone())) };
        [a, b]
    };
    let mut system = CoupledSystem::new(spaces(&forests), config).map_err(CoupledConfig::tag(0))?;
    let mut psi = Vec::with_capacity(2);
    for i in 0..2 {
        let p = &config.potentials[i];
        let u = gaussian_guess(system.discs[i].space().clone(), p.gamma, p.center, config.particles[i])
            .map_err(CoupledConfig::tag(i))?;
        psi.push(u);
    }
    let mut state = CoupledState { psi: [psi.remove(0), psi.remove(0)] };

    let mut steps = 0usize;
    let mut cycles = Vec::new();
    let mut e_old: Option<f64> = None;
    let mut cycle = 0;
    let stop = loop {
        let dofs = [0, 1].map(|i| system.discs[i].space().n_dofs());
        let mut cycle_steps = 0;
        let mut converged = false;
        while cycle_steps < sc.max_steps && !converged {
            let (next, res) = system.step(&state, config)?;
            state = next;
            steps += 1;
            cycle_steps += 1;
            converged = res.iter().all(|&r| r < sc.stop_tol);
            let e = system.energy(&state, config);
            for i in 0..2 {
                observer(&HistoryRecord {
                    state: i,
                    cycle,
                    step: steps,
                    t: steps as f64 * sc.dt,
                    energy: e.components[i],
                    mu: e.mu[i],
                    dofs: dofs[i],
                    residual: res[i],
                });
            }
        }
        let energy = system.energy(&state, config);
        let mut record = CoupledCycle {
            cycle,
            dofs,
            steps: cycle_steps,
            converged,
            energy,
            refined: [0; 2],
            coarsened: [0; 2],
        };
        let settled = e_old.is_some_and(|old| (energy.total - old).abs() <= sc.tol_energy * total_particles);
        e_old = Some(energy.total);
        if settled {
            cycles.push(record);
            break StopReason::EnergyConverged;
        }
        if cycle + 1 >= sc.max_cycles {
            cycles.push(record);
            break StopReason::CycleLimit;
        }

        let marks: Vec<Marks> = (0..2)
            .map(|i| {
                let space = system.discs[i].space();
                let eta = compute_indicator(space, &[&state.psi[i]]);
                mark(&forests[i], &eta, sc.refine_frac, sc.coarsen_frac, sc.max_dofs, dofs[i])
            })
            .collect();
        let next_forests = match mode {
            MeshMode::MultiMesh => {
                let mut out = Vec::with_capacity(2);
                for i in 0..2 {
                    if marks[i].refine.is_empty() && marks[i].coarsen.is_empty() {
                        out.push(forests[i].clone());
                        continue;
                    }
                    let (f, r, c) = adapt(&forests[i], &marks[i]).map_err(CoupledConfig::tag(i))?;
                    record.refined[i] = r;
                    record.coarsened[i] = c;
                    out.push(Arc::new(f));
                }
                [out.remove(0), out.remove(0)]
            }
            MeshMode::SingleMesh => {
                let m = union_marks(&marks[0], &marks[1]);
                if m.refine.is_empty() && m.coarsen.is_empty() {
                    forests.clone()
                } else {
                    let (f, r, c) = adapt(&forests[0], &m).map_err(CoupledConfig::tag(0))?;
                    record.refined = [r; 2];
                    record.coarsened = [c; 2];
                    let f = Arc::new(f);
                    [f.clone(), f]
                }
            }
        };
        let unchanged = (0..2).all(|i| Arc::ptr_eq(&next_forests[i], &forests[i]));
        cycles.push(record);
        if unchanged {
            break StopReason::MeshSaturated;
        }
        forests = next_forests;
        system = CoupledSystem::new(spaces(&forests), config).map_err(CoupledConfig::tag(0))?;
        let mut moved = Vec::with_capacity(2);
        for i in 0..2 {
            let mut u = state.psi[i]
                .transfer(system.discs[i].space())
                .map_err(|e| ComponentError { component: i, source: e.into() })?;
            normalize(&mut u, config.particles[i]).map_err(CoupledConfig::tag(i))?;
            moved.push(u);
        }
        state = CoupledState { psi: [moved.remove(0), moved.remove(0)] };
        cycle += 1;
    };

    let energy = system.energy(&state, config);
    let dofs = [0, 1].map(|i| system.discs[i].space().n_dofs());
    Ok(CoupledRun { forests, state, energy, dofs, steps, cycles, stop })
}
