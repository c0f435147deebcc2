//! Ground and excited states of the single-component Gross–Pitaevskii
//! equation by normalized backward-Euler imaginary-time stepping on
//! adaptive meshes.

mod discrete;
mod driver;
mod potential;

pub use discrete::{chemical_potential, energy, Discretization, EnergyParts, PackedLocal, QuadValues, StepOutcome};
pub use driver::{
    backward_euler_step, initial_state, mirror_partners, run_ground_state, run_shared, CycleRecord, GpeConfig,
    GroundStateRun, HistoryRecord, InitialGuess, Parity, SharedRun, StateDiagnostics, StateSpec, StopReason,
};
pub use potential::{
    excited_initial_guess, gaussian_guess, mass, normalize, tf_chemical_potential, tf_initial_guess, Direction,
    PotentialForm, PotentialSpec,
};

use thiserror::Error;

use crate::fe::FeError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Thomas-Fermi approximation needs beta > 0 (got {0})")]
    ThomasFermiInapplicable(f64),
    #[error("state vanished and cannot be normalized")]
    ZeroState,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
