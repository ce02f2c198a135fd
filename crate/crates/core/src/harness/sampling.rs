use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aligned::{solve_each, ModelRun};
use crate::error::{Error, Result};
use crate::scenario::{ParameterSpace, ScenarioConfig};

pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), seed_from_u64";

/// `n` independent uniform points of `space`. The stream is consumed in
/// order, so a smaller sample is always a prefix of a larger one.
pub fn uniform_samples(space: &ParameterSpace, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: Vec<f64> = (0..space.dim()).map(|_| rng.random::<f64>()).collect();
            space.from_unit(&u)
        })
        .collect()
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

/// Errors are not `Clone`; this keeps the variants callers dispatch on.
pub(crate) fn clone_error(e: &Error) -> Error {
    match e {
        Error::NonConvergence {
            time_ma,
            iterations,
            residual_norm,
            reason,
        } => Error::NonConvergence {
            time_ma: *time_ma,
            iterations: *iterations,
            residual_norm: *residual_norm,
            reason: reason.clone(),
        },
        Error::NonFinite { block, index } => Error::NonFinite { block, index: *index },
        Error::LayerCount { expected, found } => Error::LayerCount {
            expected: *expected,
            found: *found,
        },
        Error::Evaluation { point, source } => Error::Evaluation {
            point: point.clone(),
            source: Box::new(clone_error(source)),
        },
        Error::Validation(v) => Error::Validation(v.clone()),
        other => Error::Domain(other.to_string()),
    }
}

/// Full-model runs of one scenario, keyed by the exact parameter vector.
/// Every distinct point is solved once, however many experiments use it.
pub struct RunCache {
    cfg: ScenarioConfig,
    runs: HashMap<Vec<u64>, Result<ModelRun>>,
    solves: usize,
}

impl RunCache {
    pub fn new(cfg: ScenarioConfig) -> Self {
        RunCache {
            cfg,
            runs: HashMap::new(),
            solves: 0,
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Full-model solves performed so far.
    pub fn solves(&self) -> usize {
        self.solves
    }

    /// Solves the points not yet cached, in parallel; returns how many.
    pub fn ensure(&mut self, points: &[Vec<f64>]) -> usize {
        let mut missing: Vec<Vec<f64>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for p in points {
            let k = key(p);
            if !self.runs.contains_key(&k) && seen.insert(k) {
                missing.push(p.clone());
            }
        }
        let results = solve_each(&self.cfg, &missing);
        for (p, r) in missing.iter().zip(results) {
            if let Err(e) = &r {
                log::warn!("full-model solve failed at {p:?}: {e}");
            }
            self.runs.insert(key(p), r);
        }
        self.solves += missing.len();
        missing.len()
    }

    pub fn get(&self, p: &[f64]) -> Option<&Result<ModelRun>> {
        self.runs.get(&key(p))
    }

    /// Runs at every point; the first failure aborts with its point.
    pub fn all(&mut self, points: &[Vec<f64>]) -> Result<Vec<&ModelRun>> {
        self.ensure(points);
        points
            .iter()
            .map(|p| match self.get(p).expect("ensured") {
                Ok(r) => Ok(r),
                Err(e) => Err(Error::Evaluation {
                    point: p.clone(),
                    source: Box::new(clone_error(e)),
                }),
            })
            .collect()
    }

    /// Successful runs with their sample indices, and the indices of the
    /// failed points, which callers exclude and report.
    pub fn partition(&mut self, points: &[Vec<f64>]) -> (Vec<(usize, &ModelRun)>, Vec<usize>) {
        self.ensure(points);
        let mut ok = Vec::new();
        let mut failed = Vec::new();
        for (i, p) in points.iter().enumerate() {
            match self.get(p).expect("ensured") {
                Ok(r) => ok.push((i, r)),
                Err(_) => failed.push(i),
            }
        }
        (ok, failed)
    }
}
