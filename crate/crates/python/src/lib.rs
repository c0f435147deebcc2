//! Python bindings: meshes, trap potentials, single-state and multi-state
//! ground/excited runs, coupled two-component runs and config-file runs.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use mmgpe::cli::{run as run_cli, RunConfig, RunOptions};
use mmgpe::coupled::{run_coupled, run_multi_state, CoupledConfig, CoupledRun, MeshMode, UpdateOrder};
use mmgpe::fe::FeFunction;
use mmgpe::gpe::{Direction, GpeConfig, InitialGuess, PotentialSpec, StateDiagnostics, StateSpec, StopReason};
use mmgpe::mesh::{GeoForest, Point, RootLayout};

fn runtime(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn stop_name(stop: StopReason) -> &'static str {
    match stop {
        StopReason::EnergyConverged => "energy_converged",
        StopReason::MeshSaturated => "mesh_saturated",
        StopReason::CycleLimit => "cycle_limit",
    }
}

/// Hierarchical triangle forest over a rectangle.
#[pyclass(name = "Mesh", module = "pymmgpe", skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    forest: GeoForest,
}

#[pymethods]
impl PyMesh {
    /// `n × n` squares, each split into two root triangles.
    #[staticmethod]
    #[pyo3(signature = (xmin, xmax, ymin, ymax, n, layout = "union_jack"))]
    fn rectangle(xmin: f64, xmax: f64, ymin: f64, ymax: f64, n: usize, layout: &str) -> PyResult<Self> {
        let layout = match layout {
            "union_jack" => RootLayout::UnionJack,
            "diagonal" => RootLayout::Diagonal,
            other => return Err(value(format!("unknown layout `{other}` (union_jack|diagonal)"))),
        };
        let forest = GeoForest::rectangle(xmin, xmax, ymin, ymax, n, layout).map_err(value)?;
        Ok(Self { forest })
    }

    #[getter]
    fn n_active(&self) -> usize {
        self.forest.n_active()
    }

    fn leaves(&self) -> Vec<usize> {
        self.forest.leaves().collect()
    }

    fn area(&self, id: usize) -> PyResult<f64> {
        self.check(id)?;
        Ok(self.forest.area(id))
    }

    fn domain_area(&self) -> f64 {
        self.forest.domain_area()
    }

    fn triangle(&self, id: usize) -> PyResult<[(f64, f64); 3]> {
        self.check(id)?;
        Ok(self.forest.triangle(id).map(|p| (p.x, p.y)))
    }

    /// Quadrisects the given leaves (and whatever the irregularity rules
    /// force). Returns every element that was split.
    fn refine(&mut self, ids: Vec<usize>) -> PyResult<Vec<usize>> {
        self.forest.refine(&ids).map_err(value)
    }

    /// Merges complete sibling quadruples among the given leaves. Returns the
    /// re-activated parents.
    fn coarsen(&mut self, ids: Vec<usize>) -> Vec<usize> {
        self.forest.coarsen(&ids).coarsened
    }

    fn children(&self, id: usize) -> PyResult<Option<[usize; 4]>> {
        self.check(id)?;
        Ok(self.forest.element(id).children)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(active={}, area={})", self.forest.n_active(), self.forest.domain_area())
    }
}

impl PyMesh {
    fn check(&self, id: usize) -> PyResult<()> {
        if id < self.forest.elements().len() {
            Ok(())
        } else {
            Err(value(format!("no element {id}")))
        }
    }
}

/// External trap `U(x, y)`.
#[pyclass(name = "Potential", module = "pymmgpe", frozen, from_py_object)]
#[derive(Clone)]
struct PyPotential {
    spec: PotentialSpec,
}

#[pymethods]
impl PyPotential {
    /// `½(γx² x² + γy² y²)`
    #[staticmethod]
    #[pyo3(signature = (gamma_x = 1.0, gamma_y = 1.0))]
    fn harmonic(gamma_x: f64, gamma_y: f64) -> Self {
        Self { spec: PotentialSpec::harmonic(gamma_x, gamma_y) }
    }

    /// Harmonic trap plus `κ(sin²(πx/4) + sin²(πy/4))`.
    #[staticmethod]
    fn lattice(kappa: f64) -> Self {
        Self { spec: PotentialSpec::lattice(kappa) }
    }

    /// `½((ωx(x−cx))² + (ωy(y−cy))²)`
    #[staticmethod]
    fn off_centered(omega: (f64, f64), center: (f64, f64)) -> Self {
        Self { spec: PotentialSpec::off_centered([omega.0, omega.1], Point::new(center.0, center.1)) }
    }

    fn __call__(&self, x: f64, y: f64) -> f64 {
        self.spec.eval(Point::new(x, y))
    }
}

/// Time-stepping and adaptation controls.
#[pyclass(name = "SolverOptions", module = "pymmgpe", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PySolverOptions {
    dt: f64,
    stop_tol: f64,
    tol_energy: f64,
    max_steps: usize,
    max_cycles: usize,
    refine_frac: f64,
    coarsen_frac: f64,
    max_dofs: usize,
}

#[pymethods]
impl PySolverOptions {
    #[new]
    #[pyo3(signature = (
        dt = 0.01, stop_tol = 1e-6, tol_energy = 1e-4, max_steps = 20_000, max_cycles = 40,
        refine_frac = 0.5, coarsen_frac = 0.05, max_dofs = 250_000
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        dt: f64,
        stop_tol: f64,
        tol_energy: f64,
        max_steps: usize,
        max_cycles: usize,
        refine_frac: f64,
        coarsen_frac: f64,
        max_dofs: usize,
    ) -> Self {
        Self { dt, stop_tol, tol_energy, max_steps, max_cycles, refine_frac, coarsen_frac, max_dofs }
    }
}

impl PySolverOptions {
    fn config(options: Option<&Self>, beta: f64) -> GpeConfig {
        let o = options.cloned().unwrap_or_else(|| Self::new(0.01, 1e-6, 1e-4, 20_000, 40, 0.5, 0.05, 250_000));
        GpeConfig {
            beta,
            dt: o.dt,
            stop_tol: o.stop_tol,
            tol_energy: o.tol_energy,
            max_steps: o.max_steps,
            max_cycles: o.max_cycles,
            refine_frac: o.refine_frac,
            coarsen_frac: o.coarsen_frac,
            max_dofs: o.max_dofs,
            ..GpeConfig::default()
        }
    }
}

/// A converged P² wave function on its final mesh.
#[pyclass(name = "State", module = "pymmgpe", frozen)]
struct PyState {
    #[pyo3(get)]
    label: String,
    #[pyo3(get)]
    energy: f64,
    #[pyo3(get)]
    mu: f64,
    /// `∫ ψ²`
    #[pyo3(get)]
    norm: f64,
    #[pyo3(get)]
    dofs: usize,
    #[pyo3(get)]
    steps: usize,
    #[pyo3(get)]
    cycles: usize,
    #[pyo3(get)]
    stop: &'static str,
    psi: FeFunction,
    forest: Arc<GeoForest>,
}

impl PyState {
    fn new(
        label: String,
        d: StateDiagnostics,
        cycles: usize,
        stop: StopReason,
        psi: FeFunction,
        forest: Arc<GeoForest>,
    ) -> Self {
        Self {
            label,
            energy: d.energy,
            mu: d.mu,
            norm: d.norm,
            dofs: d.dofs,
            steps: d.steps,
            cycles,
            stop: stop_name(stop),
            psi,
            forest,
        }
    }
}

#[pymethods]
impl PyState {
    fn evaluate(&self, x: f64, y: f64) -> PyResult<f64> {
        self.psi.evaluate(Point::new(x, y)).map_err(value)
    }

    fn coefficients(&self) -> Vec<f64> {
        self.psi.coeffs().to_vec()
    }

    /// Coordinates of the dofs, aligned with `coefficients()`.
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.psi.space().node_coords().iter().map(|p| (p.x, p.y)).collect()
    }

    fn mesh(&self) -> PyMesh {
        PyMesh { forest: (*self.forest).clone() }
    }

    fn __repr__(&self) -> String {
        format!("State({}, E={:.10}, mu={:.10}, dofs={})", self.label, self.energy, self.mu, self.dofs)
    }
}

/// Ground states start from Thomas–Fermi, or from a unit Gaussian when
/// `beta` is zero and Thomas–Fermi does not apply.
fn parse_state(label: &str, beta: f64) -> PyResult<StateSpec> {
    match label {
        "g" if beta <= 0.0 => Ok(StateSpec {
            label: "g".into(),
            guess: InitialGuess::Gaussian { omega: [1.0, 1.0], center: Point::new(0.0, 0.0) },
            parity: None,
        }),
        "g" => Ok(StateSpec::ground("g")),
        "x" => Ok(StateSpec::excited("x", Direction::X)),
        "y" => Ok(StateSpec::excited("y", Direction::Y)),
        other => Err(value(format!("unknown state `{other}` (g|x|y)"))),
    }
}

/// Adaptive runs of the listed states (`g`, `x`, `y`), each on its own mesh
/// or all on one shared mesh.
#[pyfunction]
#[pyo3(signature = (mesh, potential, beta, states = vec!["g".to_string()], single_mesh = false, options = None))]
fn solve_states(
    py: Python<'_>,
    mesh: &PyMesh,
    potential: &PyPotential,
    beta: f64,
    states: Vec<String>,
    single_mesh: bool,
    options: Option<PySolverOptions>,
) -> PyResult<Vec<PyState>> {
    let specs = states.iter().map(|s| parse_state(s, beta)).collect::<PyResult<Vec<_>>>()?;
    let config = PySolverOptions::config(options.as_ref(), beta);
    config.validate().map_err(value)?;
    let mode = if single_mesh { MeshMode::SingleMesh } else { MeshMode::MultiMesh };
    let forest = mesh.forest.clone();
    let spec = potential.spec;
    let run = py.detach(move || run_multi_state(forest, &spec, &config, &specs, mode, &mut |_| {}));
    run.states
        .into_iter()
        .zip(&states)
        .map(|(r, label)| {
            let s = r.map_err(|e| runtime(format!("state `{label}`: {e}")))?;
            Ok(PyState::new(s.label, s.diagnostics, s.cycles.len(), s.stop, s.psi, s.forest))
        })
        .collect()
}

/// Result of a two-component run.
#[pyclass(name = "CoupledResult", module = "pymmgpe", frozen)]
struct PyCoupled {
    run: CoupledRun,
}

#[pymethods]
impl PyCoupled {
    #[getter]
    fn energy_total(&self) -> f64 {
        self.run.energy.total
    }

    #[getter]
    fn mu_total(&self) -> f64 {
        self.run.energy.mu_total
    }

    #[getter]
    fn energies(&self) -> [f64; 2] {
        self.run.energy.components
    }

    #[getter]
    fn mu(&self) -> [f64; 2] {
        self.run.energy.mu
    }

    /// `∫ ψ₁² ψ₂²`
    #[getter]
    fn overlap(&self) -> f64 {
        self.run.energy.overlap
    }

    #[getter]
    fn dofs(&self) -> [usize; 2] {
        self.run.dofs
    }

    #[getter]
    fn stop(&self) -> &'static str {
        stop_name(self.run.stop)
    }

    fn evaluate(&self, component: usize, x: f64, y: f64) -> PyResult<f64> {
        let psi = self.run.state.psi.get(component).ok_or_else(|| value("component must be 0 or 1"))?;
        psi.evaluate(Point::new(x, y)).map_err(value)
    }
}

/// Ground state of two coupled components.
#[pyfunction]
#[pyo3(signature = (mesh, potentials, coupling, particles, single_mesh = false, jacobi = false, options = None))]
#[allow(clippy::too_many_arguments)]
fn solve_coupled(
    py: Python<'_>,
    mesh: &PyMesh,
    potentials: (PyPotential, PyPotential),
    coupling: [[f64; 2]; 2],
    particles: [f64; 2],
    single_mesh: bool,
    jacobi: bool,
    options: Option<PySolverOptions>,
) -> PyResult<PyCoupled> {
    let config = CoupledConfig {
        potentials: [potentials.0.spec, potentials.1.spec],
        coupling,
        particles,
        solver: PySolverOptions::config(options.as_ref(), 0.0),
        order: if jacobi { UpdateOrder::Jacobi } else { UpdateOrder::GaussSeidel },
    };
    config.validate().map_err(value)?;
    let mode = if single_mesh { MeshMode::SingleMesh } else { MeshMode::MultiMesh };
    let forest = mesh.forest.clone();
    let run = py.detach(move || run_coupled(forest, &config, mode, &mut |_| {})).map_err(runtime)?;
    Ok(PyCoupled { run })
}

/// Runs a solver config file's text and writes its outputs into `out_dir`.
/// Returns `(label, E, mu, dofs)` summary rows.
#[pyfunction]
#[pyo3(signature = (text, out_dir, single_mesh = false))]
fn run_config(
    py: Python<'_>,
    text: &str,
    out_dir: PathBuf,
    single_mesh: bool,
) -> PyResult<Vec<(String, f64, f64, usize)>> {
    let cfg = RunConfig::parse_str(text).map_err(value)?;
    let opts = RunOptions { out_dir, single_mesh, parallel: false };
    let rows = py.detach(move || run_cli(&cfg, &opts)).map_err(runtime)?;
    Ok(rows.into_iter().map(|r| (r.label, r.energy, r.mu, r.dofs)).collect())
}

#[pymodule]
fn pymmgpe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PySolverOptions>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyCoupled>()?;
    m.add_function(wrap_pyfunction!(solve_states, m)?)?;
    m.add_function(wrap_pyfunction!(solve_coupled, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
