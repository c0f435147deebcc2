//! Two-component coupled condensates on independently adapted meshes, and
//! batches of uncoupled states on one mesh or on one mesh each.
//!
//! Coupling integrals between the two meshes are evaluated on their common
//! refinement through an [`Overlay`], so neither component is ever projected
//! onto the other's mesh.

mod multi;
mod overlay;
mod solver;

pub use multi::{run_multi_state, MultiStateRun, StateResult};
pub use overlay::{CellOverlay, CrossPoint, Overlay};
pub use solver::{
    cross_mass_contribution, run_coupled, CoupledConfig, CoupledCycle, CoupledEnergy, CoupledRun, CoupledState,
    CoupledSystem, UpdateOrder,
};

use crate::gpe::GpeError;

/// How the meshes of several components relate during adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeshMode {
    /// One forest per component, each adapted by its own indicator.
    #[default]
    MultiMesh,
    /// All components share one forest.
    SingleMesh,
}

/// A failure inside one component's solve.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("component {component}: {source}")]
pub struct ComponentError {
    pub component: usize,
    #[source]
    pub source: GpeError,
}
