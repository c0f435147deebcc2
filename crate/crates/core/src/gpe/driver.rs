use std::collections::HashMap;
use std::sync::Arc;

use crate::estimator::{apply_marks, compute_indicator, mark, mirror_closed_marks};
use crate::fe::{FeFunction, FeSpace};
use crate::linalg::CgOptions;
use crate::mesh::{GeoForest, Point};

use super::potential::{excited_initial_guess, gaussian_guess, normalize, tf_initial_guess, Direction};
use super::{Discretization, GpeError, PotentialSpec};

/// Parameters of the imaginary-time solver and the adaptive loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GpeConfig {
    pub beta: f64,
    pub dt: f64,
    /// Inner loop stops when `‖Ψⁿ⁺¹ − Ψⁿ‖∞ / Δt` falls below this.
    pub stop_tol: f64,
    /// Outer loop stops when the energy changes by at most this between
    /// consecutive adaptive cycles.
    pub tol_energy: f64,
    /// Time steps allowed per inner loop.
    pub max_steps: usize,
    pub max_cycles: usize,
    pub refine_frac: f64,
    pub coarsen_frac: f64,
    pub max_dofs: usize,
    pub cg_rtol: f64,
    /// Element work on the rayon pool (results are identical either way).
    pub parallel: bool,
}

impl Default for GpeConfig {
    fn default() -> Self {
        Self {
            beta: 0.0,
            dt: 0.01,
            stop_tol: 1e-6,
            tol_energy: 1e-4,
            max_steps: 20_000,
            max_cycles: 40,
            refine_frac: 0.5,
            coarsen_frac: 0.05,
            max_dofs: 250_000,
            cg_rtol: 1e-10,
            parallel: false,
        }
    }
}

impl GpeConfig {
    pub fn validate(&self) -> Result<(), GpeError> {
        let bad = |m: &str| Err(GpeError::InvalidParameter(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and non-negative");
        }
        if !(self.stop_tol > 0.0 && self.tol_energy > 0.0 && self.cg_rtol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(0.0 < self.coarsen_frac && self.coarsen_frac < self.refine_frac && self.refine_frac <= 1.0) {
            return bad("marking fractions must satisfy 0 < coarsen_frac < refine_frac <= 1");
        }
        if self.max_steps == 0 || self.max_cycles == 0 {
            return bad("max_steps and max_cycles must be positive");
        }
        Ok(())
    }

    pub fn cg_options(&self) -> CgOptions {
        CgOptions { rtol: self.cg_rtol, ..CgOptions::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum InitialGuess {
    ThomasFermi,
    Excited(Direction),
    /// Harmonic-oscillator Gaussian.
    Gaussian { omega: [f64; 2], center: Point },
    Function(fn(Point) -> f64),
}

/// Mirror symmetry imposed on a state after every update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parity {
    /// `X` mirrors `x → −x`.
    pub axis: Direction,
    pub odd: bool,
}

#[derive(Debug, Clone)]
pub struct StateSpec {
    pub label: String,
    pub guess: InitialGuess,
    pub parity: Option<Parity>,
}

impl StateSpec {
    pub fn ground(label: &str) -> Self {
        Self { label: label.to_string(), guess: InitialGuess::ThomasFermi, parity: None }
    }

    /// First excited state along `direction`, kept odd under the matching
    /// mirror.
    pub fn excited(label: &str, direction: Direction) -> Self {
        Self {
            label: label.to_string(),
            guess: InitialGuess::Excited(direction),
            parity: Some(Parity { axis: direction, odd: true }),
        }
    }
}

/// One line of the per-step history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub state: usize,
    pub cycle: usize,
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub mu: f64,
    pub dofs: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDiagnostics {
    pub energy: f64,
    pub mu: f64,
    /// `∫ ψ²` (one for normalized states).
    pub norm: f64,
    /// `∫ ψ⁴`
    pub quartic: f64,
    pub dofs: usize,
    pub steps: usize,
    pub time: f64,
}

/// Summary of one pass of the outer adaptive loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub dofs: usize,
    pub steps: usize,
    /// Whether every state met the stationarity criterion.
    pub converged: bool,
    pub energies: Vec<f64>,
    pub eta_total: f64,
    pub refined: usize,
    pub coarsened: usize,
    /// Energy change of each state caused by adaptation, transfer and
    /// renormalization.
    pub transfer_energy_change: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EnergyConverged,
    /// Marking produced nothing to do (typically the dof cap).
    MeshSaturated,
    CycleLimit,
}

#[derive(Debug, Clone)]
pub struct SharedRun {
    pub forest: Arc<GeoForest>,
    pub states: Vec<FeFunction>,
    pub diagnostics: Vec<StateDiagnostics>,
    pub cycles: Vec<CycleRecord>,
    pub stop: StopReason,
}

fn mirror(p: Point, axis: Direction) -> Point {
    match axis {
        Direction::X => Point::new(-p.x, p.y),
        Direction::Y => Point::new(p.x, -p.y),
    }
}

/// Mirror partner of every dof, if the node set is symmetric.
pub fn mirror_partners(space: &FeSpace, axis: Direction) -> Option<Vec<usize>> {
    let key = |p: Point| ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits());
    let index: HashMap<(u64, u64), usize> = space.node_coords().iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
    space
        .node_coords()
        .iter()
        .map(|&p| index.get(&key(mirror(p, axis))).copied())
        .collect()
}

fn symmetrize(coeffs: &mut [f64], partners: &[usize], odd: bool) {
    let sign = if odd { -1.0 } else { 1.0 };
    let old = coeffs.to_vec();
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c = 0.5 * (old[i] + sign * old[partners[i]]);
    }
}

pub fn initial_state(space: &Arc<FeSpace>, potential: &PotentialSpec, beta: f64, guess: InitialGuess) -> Result<FeFunction, GpeError> {
    match guess {
        InitialGuess::ThomasFermi => tf_initial_guess(space.clone(), potential, beta),
        InitialGuess::Excited(d) => excited_initial_guess(space.clone(), d),
        InitialGuess::Gaussian { omega, center } => gaussian_guess(space.clone(), omega, center, 1.0),
        InitialGuess::Function(f) => {
            let mut u = FeFunction::interpolate_dirichlet(space.clone(), f);
            normalize(&mut u, 1.0)?;
            Ok(u)
        }
    }
}

struct Level {
    disc: Discretization,
    partners: Vec<Option<Vec<usize>>>,
}

impl Level {
    fn new(forest: Arc<GeoForest>, potential: &PotentialSpec, specs: &[StateSpec], config: &GpeConfig) -> Self {
        let space = Arc::new(FeSpace::new(forest));
        let partners = specs
            .iter()
            .map(|s| s.parity.and_then(|p| mirror_partners(&space, p.axis)))
            .collect();
        Self { disc: Discretization::new(space, potential, config.dt, config.parallel), partners }
    }

    fn project(&self, k: usize, specs: &[StateSpec], coeffs: &mut [f64]) {
        if let (Some(p), Some(parts)) = (specs[k].parity, &self.partners[k]) {
            symmetrize(coeffs, parts, p.odd);
        }
    }

    fn diagnostics(&self, psi: &FeFunction, beta: f64) -> (f64, f64, super::EnergyParts) {
        let parts = self.disc.energy_parts(psi);
        let e = parts.quadratic + 0.5 * beta * parts.quartic;
        (e, e + 0.5 * beta * parts.quartic, parts)
    }
}

/// Adaptive imaginary-time loop for `p` uncoupled states sharing one mesh.
/// The error indicator sums over all states, so with `p = 1` this is the
/// single-state algorithm.
pub fn run_shared(
    forest: GeoForest,
    potential: &PotentialSpec,
    config: &GpeConfig,
    specs: &[StateSpec],
    observer: &mut dyn FnMut(&HistoryRecord),
) -> Result<SharedRun, GpeError> {
    config.validate()?;
    potential.validate()?;
    if specs.is_empty() {
        return Err(GpeError::InvalidParameter("at least one state is required".into()));
    }
    let beta = config.beta;
    let cg = config.cg_options();
    let mut forest = Arc::new(forest);
    let mut level = Level::new(forest.clone(), potential, specs, config);
    let mut states = Vec::with_capacity(specs.len());
    for (k, s) in specs.iter().enumerate() {
        let mut u = initial_state(level.disc.space(), potential, beta, s.guess)?;
        level.project(k, specs, u.coeffs_mut());
        normalize(&mut u, 1.0)?;
        states.push(u);
    }

    let p = specs.len();
    let mut steps = vec![0usize; p];
    let mut cycles = Vec::new();
    let mut e_old: Option<Vec<f64>> = None;
    let stop;
    let mut cycle = 0;
    loop {
        let dofs = level.disc.space().n_dofs();
        let mut converged = vec![false; p];
        let mut cycle_steps = 0;
        while cycle_steps < config.max_steps && converged.iter().any(|c| !c) {
            for k in 0..p {
                let project = |x: &mut [f64]| level.project(k, specs, x);
                let uq = level.disc.quad_values(&states[k]);
                let out = level.disc.step_with(
                    &states[k],
                    |c| level.disc.weighted_mass(c, &uq[c].map(|v| beta * v * v)),
                    1.0,
                    cg,
                    Some(&project),
                )?;
                states[k] = out.psi;
                steps[k] += 1;
                converged[k] = out.residual < config.stop_tol;
                let (e, mu, _) = level.diagnostics(&states[k], beta);
                observer(&HistoryRecord {
                    state: k,
                    cycle,
                    step: steps[k],
                    t: steps[k] as f64 * config.dt,
                    energy: e,
                    mu,
                    dofs,
                    residual: out.residual,
                });
            }
            cycle_steps += 1;
        }
        let energies: Vec<f64> = states.iter().map(|u| level.diagnostics(u, beta).0).collect();
        let mut record = CycleRecord {
            cycle,
            dofs,
            steps: cycle_steps,
            converged: converged.iter().all(|&c| c),
            energies: energies.clone(),
            eta_total: 0.0,
            refined: 0,
            coarsened: 0,
            transfer_energy_change: Vec::new(),
        };
        let settled = e_old
            .as_ref()
            .is_some_and(|old| old.iter().zip(&energies).all(|(a, b)| (a - b).abs() <= config.tol_energy));
        e_old = Some(energies.clone());
        if settled {
            cycles.push(record);
            stop = StopReason::EnergyConverged;
            break;
        }
        if cycle + 1 >= config.max_cycles {
            cycles.push(record);
            stop = StopReason::CycleLimit;
            break;
        }

        let refs: Vec<&FeFunction> = states.iter().collect();
        let eta = compute_indicator(level.disc.space(), &refs);
        let mut marks = mark(&forest, &eta, config.refine_frac, config.coarsen_frac, config.max_dofs, dofs);
        // keep the mesh mirror-symmetric wherever a parity is imposed
        for axis in [Direction::X, Direction::Y] {
            if specs.iter().any(|s| s.parity.is_some_and(|p| p.axis == axis)) {
                marks = mirror_closed_marks(&forest, &marks, |p| mirror(p, axis));
            }
        }
        record.eta_total = eta.total;
        if marks.refine.is_empty() && marks.coarsen.is_empty() {
            cycles.push(record);
            stop = StopReason::MeshSaturated;
            break;
        }
        let (next, counts) = apply_marks(&forest, &marks)?;
        record.refined = counts.refined;
        record.coarsened = counts.coarsened;
        forest = Arc::new(next);
        let new_level = Level::new(forest.clone(), potential, specs, config);
        for k in 0..p {
            let mut u = states[k].transfer(new_level.disc.space())?;
            new_level.project(k, specs, u.coeffs_mut());
            normalize(&mut u, 1.0)?;
            let e_new = new_level.diagnostics(&u, beta).0;
            record.transfer_energy_change.push(e_new - energies[k]);
            states[k] = u;
        }
        level = new_level;
        cycles.push(record);
        cycle += 1;
    }

    let diagnostics = states
        .iter()
        .zip(&steps)
        .map(|(u, &n)| {
            let (e, mu, parts) = level.diagnostics(u, beta);
            StateDiagnostics {
                energy: e,
                mu,
                norm: parts.mass,
                quartic: parts.quartic,
                dofs: u.space().n_dofs(),
                steps: n,
                time: n as f64 * config.dt,
            }
        })
        .collect();
    Ok(SharedRun { forest, states, diagnostics, cycles, stop })
}

/// Result of a single-state adaptive run.
#[derive(Debug, Clone)]
pub struct GroundStateRun {
    pub forest: Arc<GeoForest>,
    pub psi: FeFunction,
    pub diagnostics: StateDiagnostics,
    pub cycles: Vec<CycleRecord>,
    pub stop: StopReason,
}

/// Adaptive loop for one state on its own mesh.
pub fn run_ground_state(
    forest: GeoForest,
    potential: &PotentialSpec,
    config: &GpeConfig,
    state: &StateSpec,
    observer: &mut dyn FnMut(&HistoryRecord),
) -> Result<GroundStateRun, GpeError> {
    let mut run = run_shared(forest, potential, config, std::slice::from_ref(state), observer)?;
    Ok(GroundStateRun {
        forest: run.forest,
        psi: run.states.pop().expect("one state"),
        diagnostics: run.diagnostics.pop().expect("one state"),
        cycles: run.cycles,
        stop: run.stop,
    })
}

/// One step with freshly assembled matrices; convenient for single steps,
/// the adaptive driver reuses its matrices instead.
pub fn backward_euler_step(
    psi: &FeFunction,
    potential: &PotentialSpec,
    config: &GpeConfig,
) -> Result<super::StepOutcome, GpeError> {
    let disc = Discretization::new(psi.space().clone(), potential, config.dt, config.parallel);
    disc.step(psi, config.beta, config.cg_options())
}
