//! Surrogates for fields that jump across layer interfaces: interface
//! depths are approximated first, then fields are approximated at fixed
//! positions of a reference column in which every interface stays put.

mod alignment;
mod model;
mod profile;
pub mod stats;
mod surrogates;

pub use alignment::AlignmentMap;
pub use model::{solve_all, solve_each, ModelRun};
pub use profile::{Field, LayeredProfile, StationGrid, STATION_EPS};
pub use surrogates::{
    interface_labels, predict_field, AlignedFieldSurrogate, BundleDocument, FieldDocument, InterfacePrediction,
    InterfaceSurrogate, PlainFieldSurrogate, TwoStepSurrogate, BUNDLE_FORMAT_VERSION,
};
