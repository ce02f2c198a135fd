//! Sparse-grid collocation: knot families, downward-closed index sets,
//! combination-technique interpolation and quadrature, and sensitivity
//! indices through a polynomial chaos expansion.

mod grid;
mod index_set;
pub mod knots;
mod pce;
mod surrogate;

pub use grid::SparseGrid;
pub use index_set::{IndexSetSpec, MultiIndexSet};
pub use knots::{KnotFamily, KnotKind, LevelRule};
pub use pce::{legendre_orthonormal, PceExpansion, SobolReport};
pub use surrogate::{to_physical, to_reference, SparseGridSurrogate, SurrogateDocument, FORMAT_VERSION};
