use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::coupled::{CoupledConfig, MeshMode, UpdateOrder};
use crate::gpe::{Direction, GpeConfig, InitialGuess, PotentialSpec, StateSpec};
use crate::mesh::{GeoForest, MeshError, Point, RootLayout};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ground,
    MultiState,
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapKind {
    Harmonic,
    Lattice,
}

/// Everything a run needs, read from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub domain: [f64; 4],
    pub grid: usize,
    pub beta: Option<f64>,
    pub potential: TrapKind,
    pub gamma: [f64; 2],
    pub kappa: f64,
    /// Labels of the states of a multi-state run: `g`, `x` or `y`.
    pub states: Vec<String>,
    pub omega1: [f64; 2],
    pub center1: [f64; 2],
    pub omega2: [f64; 2],
    pub center2: [f64; 2],
    pub coupling: [[f64; 2]; 2],
    pub particles: [f64; 2],
    pub order: UpdateOrder,
    pub mesh_mode: MeshMode,
    pub dt: f64,
    pub stop_tol: f64,
    pub tol_energy: f64,
    pub max_steps: usize,
    pub max_cycles: usize,
    pub refine_frac: f64,
    pub coarsen_frac: f64,
    pub max_dofs: usize,
    pub cg_rtol: f64,
    pub probe: usize,
    pub export_mesh: bool,
    pub export_solution: bool,
    pub export_history: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GpeConfig::default();
        Self {
            mode: Mode::Ground,
            domain: [-8.0, 8.0, -8.0, 8.0],
            grid: 16,
            beta: None,
            potential: TrapKind::Harmonic,
            gamma: [1.0, 1.0],
            kappa: 0.0,
            states: vec!["g".into(), "x".into(), "y".into()],
            omega1: [1.0, 1.0],
            center1: [0.0, 0.0],
            omega2: [1.0, 1.0],
            center2: [0.0, 0.0],
            coupling: [[0.0; 2]; 2],
            particles: [1.0, 1.0],
            order: UpdateOrder::GaussSeidel,
            mesh_mode: MeshMode::MultiMesh,
            dt: g.dt,
            stop_tol: g.stop_tol,
            tol_energy: g.tol_energy,
            max_steps: g.max_steps,
            max_cycles: g.max_cycles,
            refine_frac: g.refine_frac,
            coarsen_frac: g.coarsen_frac,
            max_dofs: g.max_dofs,
            cg_rtol: g.cg_rtol,
            probe: 201,
            export_mesh: true,
            export_solution: true,
            export_history: true,
        }
    }
}

fn parse<T: FromStr>(v: &str) -> Option<T> {
    v.parse().ok()
}

fn parse_list<T: FromStr, const N: usize>(v: &str) -> Option<[T; N]> {
    let items: Vec<T> = v.split_whitespace().map(str::parse).collect::<Result<_, _>>().ok()?;
    items.try_into().ok()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: content.to_string() });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            match cfg.set(key, value) {
                Ok(true) => {}
                Ok(false) => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
                Err(()) => {
                    return Err(ConfigError::BadValue { line, key: key.to_string(), value: value.to_string() })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. `Ok(false)` means the key is unknown.
    fn set(&mut self, key: &str, v: &str) -> Result<bool, ()> {
        macro_rules! put {
            ($field:expr, $val:expr) => {{
                $field = $val.ok_or(())?;
            }};
        }
        match key {
            "mode" => {
                self.mode = match v {
                    "ground" => Mode::Ground,
                    "multi_state" => Mode::MultiState,
                    "coupled" => Mode::Coupled,
                    _ => return Err(()),
                }
            }
            "domain" => put!(self.domain, parse_list(v)),
            "grid" => put!(self.grid, parse(v)),
            "beta" => self.beta = Some(parse(v).ok_or(())?),
            "potential" => {
                self.potential = match v {
                    "harmonic" => TrapKind::Harmonic,
                    "lattice" => TrapKind::Lattice,
                    _ => return Err(()),
                }
            }
            "gamma" => put!(self.gamma, parse_list(v)),
            "kappa" => put!(self.kappa, parse(v)),
            "states" => {
                let labels: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
                if labels.is_empty() || labels.iter().any(|l| !matches!(l.as_str(), "g" | "x" | "y")) {
                    return Err(());
                }
                self.states = labels;
            }
            "omega1" => put!(self.omega1, parse_list(v)),
            "center1" => put!(self.center1, parse_list(v)),
            "omega2" => put!(self.omega2, parse_list(v)),
            "center2" => put!(self.center2, parse_list(v)),
            "v11" => put!(self.coupling[0][0], parse(v)),
            "v12" => put!(self.coupling[0][1], parse(v)),
            "v21" => put!(self.coupling[1][0], parse(v)),
            "v22" => put!(self.coupling[1][1], parse(v)),
            "particles" => put!(self.particles, parse_list(v)),
            "order" => {
                self.order = match v {
                    "gauss_seidel" => UpdateOrder::GaussSeidel,
                    "jacobi" => UpdateOrder::Jacobi,
                    _ => return Err(()),
                }
            }
            "mesh_mode" => {
                self.mesh_mode = match v {
                    "multi" => MeshMode::MultiMesh,
                    "single" => MeshMode::SingleMesh,
                    _ => return Err(()),
                }
            }
            "dt" => put!(self.dt, parse(v)),
            "stop_tol" => put!(self.stop_tol, parse(v)),
            "tol_energy" => put!(self.tol_energy, parse(v)),
            "max_steps" => put!(self.max_steps, parse(v)),
            "max_cycles" => put!(self.max_cycles, parse(v)),
            "refine_frac" => put!(self.refine_frac, parse(v)),
            "coarsen_frac" => put!(self.coarsen_frac, parse(v)),
            "max_dofs" => put!(self.max_dofs, parse(v)),
            "cg_rtol" => put!(self.cg_rtol, parse(v)),
            "probe" => put!(self.probe, parse(v)),
            "export_mesh" => put!(self.export_mesh, parse_bool(v)),
            "export_solution" => put!(self.export_solution, parse_bool(v)),
            "export_history" => put!(self.export_history, parse_bool(v)),
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &'static str, reason: &str| Err(ConfigError::Invalid { key, reason: reason.into() });
        let [xmin, xmax, ymin, ymax] = self.domain;
        if !(xmax > xmin && ymax > ymin) || self.domain.iter().any(|v| !v.is_finite()) {
            return bad("domain", "needs xmin < xmax and ymin < ymax");
        }
        if self.grid < 2 {
            return bad("grid", "must be at least 2");
        }
        if self.mode != Mode::Coupled {
            match self.beta {
                None => return Err(ConfigError::Missing("beta")),
                Some(b) if !(b >= 0.0 && b.is_finite()) => return bad("beta", "must be finite and non-negative"),
                _ => {}
            }
            if !self.gamma.iter().all(|&g| g > 0.0 && g.is_finite()) {
                return bad("gamma", "must be positive");
            }
            if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
                return bad("kappa", "must be non-negative");
            }
        } else {
            if !self.omega1.iter().chain(&self.omega2).all(|&g| g > 0.0 && g.is_finite()) {
                return bad("omega1", "trap frequencies must be positive");
            }
            if !self.particles.iter().all(|&n| n > 0.0 && n.is_finite()) {
                return bad("particles", "must be positive");
            }
            if !self.coupling.iter().flatten().all(|&v| v >= 0.0 && v.is_finite()) {
                return bad("v11", "coupling constants must be finite and non-negative");
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive");
        }
        if !(self.stop_tol > 0.0) {
            return bad("stop_tol", "must be positive");
        }
        if !(self.tol_energy > 0.0) {
            return bad("tol_energy", "must be positive");
        }
        if !(self.cg_rtol > 0.0 && self.cg_rtol < 1.0) {
            return bad("cg_rtol", "must lie in (0, 1)");
        }
        if self.max_steps == 0 {
            return bad("max_steps", "must be positive");
        }
        if self.max_cycles == 0 {
            return bad("max_cycles", "must be positive");
        }
        if !(self.refine_frac > 0.0 && self.refine_frac <= 1.0) {
            return bad("refine_frac", "must lie in (0, 1]");
        }
        if !(self.coarsen_frac > 0.0 && self.coarsen_frac < self.refine_frac) {
            return bad("coarsen_frac", "must lie in (0, refine_frac)");
        }
        if self.probe < 2 {
            return bad("probe", "must be at least 2");
        }
        Ok(())
    }

    /// Canonical `key = value` listing that parses back to the same config.
    pub fn dump(&self) -> String {
        let mode = match self.mode {
            Mode::Ground => "ground",
            Mode::MultiState => "multi_state",
            Mode::Coupled => "coupled",
        };
        let potential = match self.potential {
            TrapKind::Harmonic => "harmonic",
            TrapKind::Lattice => "lattice",
        };
        let order = match self.order {
            UpdateOrder::GaussSeidel => "gauss_seidel",
            UpdateOrder::Jacobi => "jacobi",
        };
        let mesh_mode = match self.mesh_mode {
            MeshMode::MultiMesh => "multi",
            MeshMode::SingleMesh => "single",
        };
        let mut rows: Vec<(&str, String)> = vec![
            ("mode", mode.into()),
            ("domain", join(&self.domain)),
            ("grid", self.grid.to_string()),
        ];
        if let Some(b) = self.beta {
            rows.push(("beta", b.to_string()));
        }
        rows.extend([
            ("potential", potential.into()),
            ("gamma", join(&self.gamma)),
            ("kappa", self.kappa.to_string()),
            ("states", self.states.join(",")),
            ("omega1", join(&self.omega1)),
            ("center1", join(&self.center1)),
            ("omega2", join(&self.omega2)),
            ("center2", join(&self.center2)),
            ("v11", self.coupling[0][0].to_string()),
            ("v12", self.coupling[0][1].to_string()),
            ("v21", self.coupling[1][0].to_string()),
            ("v22", self.coupling[1][1].to_string()),
            ("particles", join(&self.particles)),
            ("order", order.into()),
            ("mesh_mode", mesh_mode.into()),
            ("dt", self.dt.to_string()),
            ("stop_tol", self.stop_tol.to_string()),
            ("tol_energy", self.tol_energy.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("max_cycles", self.max_cycles.to_string()),
            ("refine_frac", self.refine_frac.to_string()),
            ("coarsen_frac", self.coarsen_frac.to_string()),
            ("max_dofs", self.max_dofs.to_string()),
            ("cg_rtol", self.cg_rtol.to_string()),
            ("probe", self.probe.to_string()),
            ("export_mesh", self.export_mesh.to_string()),
            ("export_solution", self.export_solution.to_string()),
            ("export_history", self.export_history.to_string()),
        ]);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn initial_forest(&self) -> Result<GeoForest, MeshError> {
        let [xmin, xmax, ymin, ymax] = self.domain;
        GeoForest::rectangle(xmin, xmax, ymin, ymax, self.grid, RootLayout::UnionJack)
    }

    pub fn solver(&self, parallel: bool) -> GpeConfig {
        GpeConfig {
            beta: self.beta.unwrap_or(0.0),
            dt: self.dt,
            stop_tol: self.stop_tol,
            tol_energy: self.tol_energy,
            max_steps: self.max_steps,
            max_cycles: self.max_cycles,
            refine_frac: self.refine_frac,
            coarsen_frac: self.coarsen_frac,
            max_dofs: self.max_dofs,
            cg_rtol: self.cg_rtol,
            parallel,
        }
    }

    pub fn trap(&self) -> PotentialSpec {
        match self.potential {
            TrapKind::Harmonic => PotentialSpec::harmonic(self.gamma[0], self.gamma[1]),
            TrapKind::Lattice => PotentialSpec { gamma: self.gamma, ..PotentialSpec::lattice(self.kappa) },
        }
    }

    /// Ground states start from Thomas–Fermi when `beta > 0` and from the
    /// trap's Gaussian otherwise.
    pub fn ground_spec(&self, label: &str) -> StateSpec {
        if self.beta.unwrap_or(0.0) > 0.0 {
            return StateSpec::ground(label);
        }
        StateSpec {
            label: label.to_string(),
            guess: InitialGuess::Gaussian { omega: self.gamma, center: Point::new(0.0, 0.0) },
            parity: None,
        }
    }

    pub fn state_specs(&self) -> Vec<StateSpec> {
        self.states
            .iter()
            .map(|l| match l.as_str() {
                "x" => StateSpec::excited(l, Direction::X),
                "y" => StateSpec::excited(l, Direction::Y),
                _ => self.ground_spec(l),
            })
            .collect()
    }

    pub fn coupled(&self, parallel: bool) -> CoupledConfig {
        let p = |omega: [f64; 2], c: [f64; 2]| PotentialSpec::off_centered(omega, Point::new(c[0], c[1]));
        CoupledConfig {
            potentials: [p(self.omega1, self.center1), p(self.omega2, self.center2)],
            coupling: self.coupling,
            particles: self.particles,
            solver: self.solver(parallel),
            order: self.order,
        }
    }
}
