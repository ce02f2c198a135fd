//! Experiment drivers. Each writes CSV files and a manifest with their
//! checksums into its output directory; a fixed spec and seed give
//! byte-identical CSV output.

mod experiments;
mod output;
mod sampling;
mod spec;

pub use experiments::{
    blended, build_surrogate, classify, convergence, load_config, mc_validate, open_cache, pdf, robustness,
    run_experiment, simulate, sobol, BlendRun, ClassifyReport, ConvergenceReport, ConvergenceRow, McValidation,
    PdfLevel, PdfReport, SobolTable, MODE_MIN_HEIGHT, PROFILE_COLUMNS, STATIONS_PER_LAYER, SURROGATE_FILE,
};
pub use output::{config_hash, num, sha256_hex, Artifacts, FileEntry, RunManifest, MANIFEST_FILE};
pub use sampling::{uniform_samples, RunCache, RNG_NAME};
pub use spec::{Budget, DepthRange, ExperimentKind, ExperimentSpec, GridSettings, GridShape, Knots};
