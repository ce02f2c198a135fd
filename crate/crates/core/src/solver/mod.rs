//! Forward compaction solver on a Lagrangian 1D mesh.

mod banded;
pub mod diagnostics;
mod interfaces;
mod newton;
mod state;
mod system;
mod thermal;
mod timeline;

pub use banded::{BandLu, BandMatrix};
pub use interfaces::extract_interfaces;
pub use newton::{newton_solve, NewtonOutcome};
pub use state::BasinState;
pub use system::{assemble_jacobian, assemble_residual, block_layout_permutation, Jacobian, StepContext};
pub use thermal::thermal_solve;
pub use timeline::{advance_time, initial_state, simulate, SimulationOptions, Snapshot, SolveReport, StepRecord};
