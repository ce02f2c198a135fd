use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse_grid::{KnotFamily, MultiIndexSet, SparseGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Robustness,
    BuildSurrogate,
    Convergence,
    Sobol,
    Classify,
    Pdf,
    McValidate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::BuildSurrogate => "build-surrogate",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Sobol => "sobol",
            ExperimentKind::Classify => "classify",
            ExperimentKind::Pdf => "pdf",
            ExperimentKind::McValidate => "mc-validate",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Knots {
    #[default]
    Gl,
    Cc,
}

impl Knots {
    pub fn family(self) -> KnotFamily {
        match self {
            Knots::Gl => KnotFamily::gauss_legendre(),
            Knots::Cc => KnotFamily::clenshaw_curtis(),
        }
    }

    pub fn parse(s: &str) -> Result<Knots> {
        match s.to_ascii_lowercase().as_str() {
            "gl" => Ok(Knots::Gl),
            "cc" => Ok(Knots::Cc),
            _ => Err(Error::Validation(vec![format!("unknown knot family `{s}` (expected gl or cc)")])),
        }
    }
}

/// Index-set shape: isotropic, or anisotropic with one weight per parameter.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridShape {
    #[default]
    Iso,
    Aniso { weights: Vec<f64> },
}

impl GridShape {
    /// `iso` or `aniso:<w1>,<w2>,...`.
    pub fn parse(s: &str) -> Result<GridShape> {
        let bad = |m: String| Error::Validation(vec![m]);
        if s.eq_ignore_ascii_case("iso") {
            return Ok(GridShape::Iso);
        }
        let Some(rest) = s.strip_prefix("aniso:") else {
            return Err(bad(format!("grid `{s}` must be `iso` or `aniso:<weights>`")));
        };
        let weights = rest
            .split(',')
            .map(|w| w.trim().parse::<f64>().map_err(|_| bad(format!("bad anisotropy weight `{w}`"))))
            .collect::<Result<Vec<_>>>()?;
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(bad(format!("anisotropy weights must be positive: {rest}")));
        }
        Ok(GridShape::Aniso { weights })
    }

    pub fn label(&self) -> String {
        match self {
            GridShape::Iso => "iso".into(),
            GridShape::Aniso { weights } => {
                let w: Vec<String> = weights.iter().map(|w| format!("{w}")).collect();
                format!("aniso:{}", w.join(","))
            }
        }
    }

    pub fn index_set(&self, dim: usize, w: f64) -> Result<MultiIndexSet> {
        match self {
            GridShape::Iso => Ok(MultiIndexSet::isotropic(dim, w)),
            GridShape::Aniso { weights } => {
                if weights.len() != dim {
                    return Err(Error::Validation(vec![format!(
                        "{} anisotropy weights for {dim} parameters",
                        weights.len()
                    )]));
                }
                MultiIndexSet::anisotropic(w, weights)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSettings {
    pub knots: Knots,
    pub shape: GridShape,
    /// Levels; experiments that use a single grid take the last one.
    pub w: Vec<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            knots: Knots::Gl,
            shape: GridShape::Aniso {
                weights: vec![4.0, 4.0, 1.0],
            },
            w: vec![12.0],
        }
    }
}

impl GridSettings {
    pub fn grid(&self, dim: usize, w: f64) -> Result<SparseGrid> {
        SparseGrid::new(self.shape.index_set(dim, w)?, self.knots.family())
    }

    pub fn finest(&self) -> Result<f64> {
        self.w
            .last()
            .copied()
            .ok_or_else(|| Error::Validation(vec!["at least one level w is required".into()]))
    }
}

/// Sample sizes of the Monte Carlo and reference computations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Full-model Monte Carlo sample.
    pub samples: usize,
    /// Minimum number of points of the reference grid for mean errors.
    pub reference_points: usize,
    /// Largest grid in a convergence sweep.
    pub max_collocation: usize,
}

impl Budget {
    pub fn desk() -> Self {
        Budget {
            samples: 2000,
            reference_points: 3000,
            max_collocation: 200,
        }
    }

    pub fn paper() -> Self {
        Budget {
            samples: 5000,
            reference_points: 30000,
            max_collocation: 1000,
        }
    }
}

/// Regular depth grid from `top` down to `bottom` (both included).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub top: f64,
    pub bottom: f64,
    pub step: f64,
}

impl DepthRange {
    pub fn depths(&self) -> Result<Vec<f64>> {
        if !(self.top > self.bottom && self.step > 0.0) {
            return Err(Error::Validation(vec![format!("invalid depth range {self:?}")]));
        }
        let n = ((self.top - self.bottom) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.top - i as f64 * self.step).collect())
    }
}

/// Everything that determines the output of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scenario: PathBuf,
    pub grid: GridSettings,
    pub budget: Budget,
    pub seed: u64,
    /// Depths (m, negative) for the pdf experiment.
    pub depths: Vec<f64>,
    /// Classification depth grid.
    pub depth_range: DepthRange,
    /// Blend factors for the robustness sweep.
    pub blends: Vec<f64>,
    /// Snapshot times (Ma); empty means evenly spaced over the history.
    pub snapshots: Vec<f64>,
    /// Parameter overrides `(name or target, value)` for single runs.
    pub params: Vec<(String, f64)>,
    pub out: PathBuf,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, scenario: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            kind,
            scenario: scenario.into(),
            grid: GridSettings::default(),
            budget: Budget::desk(),
            seed: 20240521,
            depths: vec![-600.0, -1350.0, -1500.0, -2250.0],
            depth_range: DepthRange {
                top: -500.0,
                bottom: -2300.0,
                step: 10.0,
            },
            blends: vec![1.0, 0.7, 0.5],
            snapshots: Vec::new(),
            params: Vec::new(),
            out: out.into(),
        }
    }
}
