//! One-dimensional sedimentary-basin compaction with uncertainty
//! quantification by sparse-grid collocation.
//!
//! * [`solver`]: coupled mechanical compaction, quartz cementation, fluid
//!   flow and heat transport on a Lagrangian mesh with cell insertion.
//! * [`sparse_grid`]: combination-technique interpolation and quadrature,
//!   Sobol indices.
//! * [`aligned`]: interface surrogates and layer-aligned field surrogates
//!   for fields that jump across material interfaces.
//! * [`harness`]: reproducible experiment drivers with CSV output.

// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the band storage.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aligned;
pub mod error;
pub mod harness;
pub mod material;
pub mod scenario;
pub mod solver;
pub mod sparse_grid;
pub mod units;

pub use error::{Error, Result};
pub use scenario::{load_scenario, DepositionEvent, ParameterSpace, ScenarioConfig};
