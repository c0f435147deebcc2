use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::coupled::{run_coupled, run_multi_state, ComponentError, MeshMode};
use crate::fe::FeFunction;
use crate::gpe::{run_ground_state, GpeError, HistoryRecord};
use crate::mesh::MeshError;

use super::config::{Mode, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] GpeError),
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error("state `{label}` failed: {source}")]
    State { label: String, source: GpeError },
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub energy: f64,
    pub mu: f64,
    pub dofs: usize,
}

/// Options that come from the command line rather than the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub single_mesh: bool,
    pub parallel: bool,
}

struct Outputs<'a> {
    dir: &'a Path,
}

impl Outputs<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, RunError> {
        let path = self.path(name);
        File::create(&path).map(BufWriter::new).map_err(|source| RunError::Io { path, source })
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), RunError> {
        let mut w = self.create(name)?;
        f(&mut w).and_then(|_| w.flush()).map_err(|source| RunError::Io { path: self.path(name), source })
    }
}

/// Streams history lines into one CSV per label, remembering the first I/O
/// failure instead of aborting the solver.
struct HistorySink {
    files: Vec<(PathBuf, BufWriter<File>)>,
    error: Option<RunError>,
}

impl HistorySink {
    fn new(out: &Outputs, labels: &[String], enabled: bool) -> Result<Self, RunError> {
        let mut files = Vec::new();
        if enabled {
            for l in labels {
                let name = format!("history_{l}.csv");
                let mut w = out.create(&name)?;
                writeln!(w, "step,t,E,mu,dofs,residual").map_err(|source| RunError::Io { path: out.path(&name), source })?;
                files.push((out.path(&name), w));
            }
        }
        Ok(Self { files, error: None })
    }

    fn record(&mut self, r: &HistoryRecord) {
        if self.error.is_some() {
            return;
        }
        if let Some((path, w)) = self.files.get_mut(r.state) {
            let line =
                writeln!(w, "{},{:.14e},{:.14e},{:.14e},{},{:.14e}", r.step, r.t, r.energy, r.mu, r.dofs, r.residual);
            if let Err(source) = line {
                self.error = Some(RunError::Io { path: path.clone(), source });
            }
        }
    }

    fn finish(self) -> Result<(), RunError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        for (path, mut w) in self.files {
            w.flush().map_err(|source| RunError::Io { path, source })?;
        }
        Ok(())
    }
}

fn export_state(out: &Outputs, cfg: &RunConfig, label: &str, psi: &FeFunction) -> Result<(), RunError> {
    if cfg.export_solution {
        out.write(&format!("solution_{label}.csv"), |w| psi.write_probe_csv(w, cfg.probe, cfg.probe))?;
    }
    if cfg.export_mesh {
        let space = psi.space();
        out.write(&format!("mesh_{label}.txt"), |w| space.mesh().write_text(space.forest(), w))?;
    }
    Ok(())
}

fn write_summary(out: &Outputs, rows: &[SummaryRow]) -> Result<(), RunError> {
    out.write("summary.csv", |w| {
        writeln!(w, "label,E,mu,dofs")?;
        for r in rows {
            writeln!(w, "{},{:.14e},{:.14e},{}", r.label, r.energy, r.mu, r.dofs)?;
        }
        Ok(())
    })
}

/// Runs the configured experiment, writes every output file into
/// `opts.out_dir` and returns the summary rows.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<SummaryRow>, RunError> {
    let dir = opts.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    let out = Outputs { dir };
    let mesh_mode = if opts.single_mesh { MeshMode::SingleMesh } else { cfg.mesh_mode };
    let forest = cfg.initial_forest()?;
    let solver = cfg.solver(opts.parallel);

    let rows = match cfg.mode {
        Mode::Ground => {
            let labels = vec!["ground".to_string()];
            let mut sink = HistorySink::new(&out, &labels, cfg.export_history)?;
            let spec = cfg.ground_spec("ground");
            let result = run_ground_state(forest, &cfg.trap(), &solver, &spec, &mut |r| sink.record(r));
            sink.finish()?;
            let run = result?;
            export_state(&out, cfg, "ground", &run.psi)?;
            vec![SummaryRow {
                label: "ground".into(),
                energy: run.diagnostics.energy,
                mu: run.diagnostics.mu,
                dofs: run.diagnostics.dofs,
            }]
        }
        Mode::MultiState => {
            let specs = cfg.state_specs();
            let mut sink = HistorySink::new(&out, &cfg.states, cfg.export_history)?;
            let batch = run_multi_state(forest, &cfg.trap(), &solver, &specs, mesh_mode, &mut |r| sink.record(r));
            sink.finish()?;
            let mut rows = Vec::new();
            let mut first_error = None;
            for (spec, state) in specs.iter().zip(batch.states) {
                match state {
                    Ok(s) => {
                        export_state(&out, cfg, &s.label, &s.psi)?;
                        rows.push(SummaryRow {
                            label: s.label,
                            energy: s.diagnostics.energy,
                            mu: s.diagnostics.mu,
                            dofs: s.diagnostics.dofs,
                        });
                    }
                    Err(source) => {
                        first_error.get_or_insert(RunError::State { label: spec.label.clone(), source });
                    }
                }
            }
            if let Some(e) = first_error {
                write_summary(&out, &rows)?;
                return Err(e);
            }
            rows
        }
        Mode::Coupled => {
            let labels = vec!["psi1".to_string(), "psi2".to_string()];
            let mut sink = HistorySink::new(&out, &labels, cfg.export_history)?;
            let result = run_coupled(forest, &cfg.coupled(opts.parallel), mesh_mode, &mut |r| sink.record(r));
            sink.finish()?;
            let run = result?;
            let e = run.energy;
            let mut rows = Vec::new();
            for i in 0..2 {
                export_state(&out, cfg, &labels[i], &run.state.psi[i])?;
                rows.push(SummaryRow { label: labels[i].clone(), energy: e.components[i], mu: e.mu[i], dofs: run.dofs[i] });
            }
            rows.push(SummaryRow { label: "total".into(), energy: e.total, mu: e.mu_total, dofs: run.dofs[0] + run.dofs[1] });
            rows
        }
    };
    write_summary(&out, &rows)?;
    Ok(rows)
}
