//! Sparse-grid surrogate of a vector-valued model on a box of uniform
//! parameters: construction, evaluation, moments and JSON persistence.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ParameterSpace;

use super::grid::SparseGrid;
use super::index_set::MultiIndexSet;
use super::knots::KnotFamily;
use super::pce::PceExpansion;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct SparseGridSurrogate {
    pub grid: SparseGrid,
    pub space: ParameterSpace,
    pub output_names: Vec<String>,
    /// Model outputs per collocation point.
    values: Vec<Vec<f64>>,
}

/// Maps a reference point in [-1, 1]^N to the parameter box.
pub fn to_physical(space: &ParameterSpace, y: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(&space.intervals)
        .map(|(&t, &(a, b))| {
            if t == -1.0 {
                a
            } else if t == 1.0 {
                b
            } else {
                0.5 * (a + b) + 0.5 * (b - a) * t
            }
        })
        .collect()
}

/// Inverse of [`to_physical`]; degenerate intervals map to 0.
pub fn to_reference(space: &ParameterSpace, p: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(&space.intervals)
        .map(|(&x, &(a, b))| {
            if b > a {
                (2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

impl SparseGridSurrogate {
    /// Physical coordinates of the collocation points of `grid` in `space`.
    pub fn collocation_points(grid: &SparseGrid, space: &ParameterSpace) -> Vec<Vec<f64>> {
        grid.points().iter().map(|y| to_physical(space, y)).collect()
    }

    /// Evaluates `model` once per distinct collocation point (in parallel on
    /// the current rayon pool) and stores the outputs.
    pub fn build<F>(
        grid: SparseGrid,
        space: ParameterSpace,
        output_names: Vec<String>,
        model: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let points = Self::collocation_points(&grid, &space);
        let values: Vec<Result<Vec<f64>>> = points.par_iter().map(|p| model(p)).collect();
        let mut out = Vec::with_capacity(values.len());
        for (p, v) in points.into_iter().zip(values) {
            out.push(v.map_err(|e| Error::Evaluation {
                point: p,
                source: Box::new(e),
            })?);
        }
        Self::from_values(grid, space, output_names, out)
    }

    pub fn from_values(
        grid: SparseGrid,
        space: ParameterSpace,
        output_names: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if space.dim() != grid.dim() {
            return Err(Error::Domain(format!(
                "grid has dimension {} but parameter space {}",
                grid.dim(),
                space.dim()
            )));
        }
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "{} values for {} collocation points",
                values.len(),
                grid.len()
            )));
        }
        let width = output_names.len();
        if let Some(v) = values.iter().find(|v| v.len() != width) {
            return Err(Error::Domain(format!(
                "model returned {} outputs, expected {width}",
                v.len()
            )));
        }
        Ok(SparseGridSurrogate {
            grid,
            space,
            output_names,
            values,
        })
    }

    pub fn outputs(&self) -> usize {
        self.output_names.len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn evaluation_count(&self) -> usize {
        self.values.len()
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.output_names.iter().position(|n| n == name)
    }

    fn check_domain(&self, p: &[f64]) -> Result<()> {
        if !self.space.contains(p) {
            return Err(Error::OutOfDomain { point: p.to_vec() });
        }
        Ok(())
    }

    /// All outputs at `p`.
    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(p)?;
        let w = self.grid.interpolation_weights(&to_reference(&self.space, p));
        let mut out = vec![0.0; self.outputs()];
        for (wk, fk) in w.iter().zip(&self.values) {
            if *wk != 0.0 {
                for (o, f) in out.iter_mut().zip(fk) {
                    *o += wk * f;
                }
            }
        }
        Ok(out)
    }

    /// A single output at `p`.
    pub fn evaluate_output(&self, p: &[f64], output: usize) -> Result<f64> {
        self.check_domain(p)?;
        let w = self.grid.interpolation_weights(&to_reference(&self.space, p));
        Ok(w.iter().zip(&self.values).map(|(wk, fk)| wk * fk[output]).sum())
    }

    /// Sparse quadrature of the stored outputs (the mean of each output).
    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        for (w, f) in self.grid.quadrature_weights().iter().zip(&self.values) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += w * v;
            }
        }
        out
    }

    /// Orthonormal Legendre expansion of the surrogate.
    pub fn pce(&self) -> PceExpansion {
        PceExpansion::from_surrogate(self)
    }

    /// Variance of each output: the exact second moment of the surrogate
    /// minus the squared mean.
    pub fn variance(&self) -> Vec<f64> {
        self.pce().variance()
    }

    pub fn to_document(&self) -> SurrogateDocument {
        SurrogateDocument {
            format_version: FORMAT_VERSION,
            family: self.grid.family,
            index_set: self.grid.index_set.clone(),
            space: self.space.clone(),
            output_names: self.output_names.clone(),
            coefficients: self.grid.coefficients(),
            points: self.grid.points().to_vec(),
            values: self.values.clone(),
        }
    }

    pub fn from_document(doc: SurrogateDocument) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Domain(format!(
                "unsupported surrogate format version {}",
                doc.format_version
            )));
        }
        let grid = SparseGrid::new(doc.index_set, doc.family)?;
        if grid.points() != doc.points.as_slice() || grid.coefficients() != doc.coefficients {
            return Err(Error::Domain(
                "stored collocation points do not match the rebuilt grid".into(),
            ));
        }
        Self::from_values(grid, doc.space, doc.output_names, doc.values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_document())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_document(serde_json::from_str(&text)?)
    }
}

/// Persisted form of a surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateDocument {
    pub format_version: u32,
    pub family: KnotFamily,
    pub index_set: MultiIndexSet,
    pub space: ParameterSpace,
    pub output_names: Vec<String>,
    pub coefficients: Vec<(Vec<usize>, i64)>,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}
