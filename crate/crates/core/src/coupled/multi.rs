use std::sync::Arc;

use crate::fe::FeFunction;
use crate::gpe::{
    run_ground_state, run_shared, CycleRecord, GpeConfig, GpeError, HistoryRecord, PotentialSpec, StateDiagnostics,
    StateSpec, StopReason,
};
use crate::mesh::GeoForest;

use super::MeshMode;

/// Outcome for one state of a multi-state run.
#[derive(Debug, Clone)]
pub struct StateResult {
    pub label: String,
    pub forest: Arc<GeoForest>,
    pub psi: FeFunction,
    pub diagnostics: StateDiagnostics,
    pub cycles: Vec<CycleRecord>,
    pub stop: StopReason,
}

#[derive(Debug)]
pub struct MultiStateRun {
    pub mode: MeshMode,
    /// One entry per requested state, in order. In multi-mesh mode a failing
    /// state does not affect the others.
    pub states: Vec<Result<StateResult, GpeError>>,
}

impl MultiStateRun {
    /// Dofs of the mesh behind each state (shared in single-mesh mode).
    pub fn dofs(&self) -> Vec<Option<usize>> {
        self.states.iter().map(|s| s.as_ref().ok().map(|r| r.diagnostics.dofs)).collect()
    }
}

/// Computes several uncoupled states of one trap. In multi-mesh mode every
/// state gets its own copy of `forest` and its own adaptive run; in
/// single-mesh mode all states share a forest and the indicator sums over
/// them.
pub fn run_multi_state(
    forest: GeoForest,
    potential: &PotentialSpec,
    config: &GpeConfig,
    specs: &[StateSpec],
    mode: MeshMode,
    observer: &mut dyn FnMut(&HistoryRecord),
) -> MultiStateRun {
    let states = match mode {
        MeshMode::MultiMesh => specs
            .iter()
            .enumerate()
            .map(|(k, spec)| {
                let mut tagged = |r: &HistoryRecord| observer(&HistoryRecord { state: k, ..*r });
                run_ground_state(forest.clone(), potential, config, spec, &mut tagged).map(|run| StateResult {
                    label: spec.label.clone(),
                    forest: run.forest,
                    psi: run.psi,
                    diagnostics: run.diagnostics,
                    cycles: run.cycles,
                    stop: run.stop,
                })
            })
            .collect(),
        MeshMode::SingleMesh => match run_shared(forest, potential, config, specs, observer) {
            Ok(run) => run
                .states
                .into_iter()
                .zip(run.diagnostics)
                .zip(specs)
                .map(|((psi, diagnostics), spec)| {
                    Ok(StateResult {
                        label: spec.label.clone(),
                        forest: run.forest.clone(),
                        psi,
                        diagnostics,
                        cycles: run.cycles.clone(),
                        stop: run.stop,
                    })
                })
                .collect(),
            Err(e) => specs.iter().map(|_| Err(e.clone())).collect(),
        },
    };
    MultiStateRun { mode, states }
}
