//! Full-model runs at parameter points: the data behind every surrogate
//! and the reference side of every Monte Carlo comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::solver::{extract_interfaces, simulate, BasinState, SimulationOptions};

use super::alignment::AlignmentMap;
use super::profile::{Field, LayeredProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub params: Vec<f64>,
    /// Interface elevations, seafloor first.
    pub interfaces: Vec<f64>,
    pub state: BasinState,
    pub iterations: usize,
}

impl ModelRun {
    /// Solves `cfg` with its uncertain parameters set to `p`. Runs that end
    /// with a different number of layers are rejected.
    pub fn solve(cfg: &ScenarioConfig, p: &[f64]) -> Result<Self> {
        let c = cfg.with_parameters(p)?;
        let report = simulate(&c, &SimulationOptions::default())?;
        let interfaces = extract_interfaces(&report.final_state, c.layer_count())?;
        Ok(ModelRun {
            params: p.to_vec(),
            interfaces,
            iterations: report.total_iterations(),
            state: report.final_state,
        })
    }

    pub fn alignment(&self) -> Result<AlignmentMap> {
        AlignmentMap::new(self.interfaces.clone())
    }

    pub fn profile(&self, field: Field, cfg: &ScenarioConfig) -> Result<LayeredProfile> {
        LayeredProfile::from_state(&self.state, field, cfg)
    }

    /// Layer (from the top) containing `z`.
    pub fn layer_at(&self, z: f64) -> Result<usize> {
        self.alignment()?.layer_of(z)
    }
}

/// Solves every point, in parallel on the current rayon pool, keeping the
/// input order. The first failure is returned with its parameter vector.
pub fn solve_all(cfg: &ScenarioConfig, points: &[Vec<f64>]) -> Result<Vec<ModelRun>> {
    let runs: Vec<Result<ModelRun>> = points.par_iter().map(|p| ModelRun::solve(cfg, p)).collect();
    runs.into_iter()
        .zip(points)
        .map(|(r, p)| {
            r.map_err(|e| Error::Evaluation {
                point: p.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Like [`solve_all`] but keeps failures in place instead of aborting.
pub fn solve_each(cfg: &ScenarioConfig, points: &[Vec<f64>]) -> Vec<Result<ModelRun>> {
    points.par_iter().map(|p| ModelRun::solve(cfg, p)).collect()
}
