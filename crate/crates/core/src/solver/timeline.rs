//! Time stepping over the depositional history: cell insertion, per-step
//! Newton solves, snapshots and the run report.

use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::units::{ma_to_seconds, rate_to_si, seconds_to_ma};

use super::newton::newton_solve;
use super::state::BasinState;
use super::system::StepContext;
use super::thermal::thermal_solve;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Times (Ma) at which the state is recorded; the nearest following
    /// step end is used.
    pub snapshots_ma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time_ma: f64,
    pub dt: f64,
    pub cells: usize,
    pub iterations: usize,
    /// Whether a cell was added at the start of the step.
    pub inserted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time_ma: f64,
    pub state: BasinState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: BasinState,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    pub fn max_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).max().unwrap_or(0)
    }

    pub fn mean_iterations(&self) -> f64 {
        let solved: Vec<_> = self.steps.iter().filter(|s| s.iterations > 0).collect();
        if solved.is_empty() {
            0.0
        } else {
            solved.iter().map(|s| s.iterations as f64).sum::<f64>() / solved.len() as f64
        }
    }
}

/// State at t = 0: empty, or the initial column in hydrostatic equilibrium
/// with zero effective stress and a steady conductive temperature profile.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<BasinState> {
    let mut st = BasinState::empty();
    let Some(col) = &cfg.initial_column else {
        return Ok(st);
    };
    let mat = cfg
        .material_index(&col.material)
        .ok_or_else(|| Error::Domain(format!("unknown material `{}`", col.material)))?;
    let cells = (col.thickness / cfg.cell_size).round().max(1.0) as usize;
    let h = col.thickness / cells as f64;
    let top = -cfg.h_sea;
    for _ in 0..cells {
        st.push_fresh_cell(h, top, mat, 0, cfg);
    }
    // stress-free: total load equals the hydrostatic pore pressure
    let p = st.hydrostatic_pressure(cfg);
    st.s.clone_from(&p);
    st.p = p;
    st.t = thermal_solve(&st, &st.t.clone(), f64::INFINITY, cfg)?;
    Ok(st)
}

struct Stepper<'a> {
    cfg: &'a ScenarioConfig,
    state: BasinState,
    steps: Vec<StepRecord>,
    snapshots: Vec<Snapshot>,
    pending_snapshots: Vec<f64>,
}

impl Stepper<'_> {
    fn step(&mut self, dt: f64, fresh_load: f64, inserted: bool) -> Result<()> {
        let time = self.state.time + dt;
        let iterations = if self.state.cell_count() == 0 {
            self.state.time = time;
            0
        } else {
            let ctx = StepContext { dt, time, fresh_load };
            let out = newton_solve(&self.state, &ctx, self.cfg)?;
            self.state = out.state;
            out.iterations
        };
        let time_ma = seconds_to_ma(time);
        self.steps.push(StepRecord {
            time_ma,
            dt,
            cells: self.state.cell_count(),
            iterations,
            inserted,
        });
        while let Some(&t) = self.pending_snapshots.first() {
            if t <= time_ma * (1.0 + 1e-12) {
                self.snapshots.push(Snapshot {
                    time_ma,
                    state: self.state.clone(),
                });
                self.pending_snapshots.remove(0);
            } else {
                break;
            }
        }
        Ok(())
    }
}

/// Runs the full history from `state` (assumed to be at t = 0).
pub fn advance_time(state: BasinState, cfg: &ScenarioConfig, opts: &SimulationOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let mut pending = opts.snapshots_ma.clone();
    pending.sort_by(f64::total_cmp);
    let mut run = Stepper {
        cfg,
        state,
        steps: Vec::new(),
        snapshots: Vec::new(),
        pending_snapshots: pending,
    };
    let layer_offset = usize::from(cfg.initial_column.is_some());
    let alpha = cfg.alpha_steps.max(1);
    let top = -cfg.h_sea;

    for (k, ev) in cfg.layers.iter().enumerate() {
        let mat_idx = cfg
            .material_index(&ev.material)
            .ok_or_else(|| Error::Domain(format!("unknown material `{}`", ev.material)))?;
        let mat = &cfg.materials[mat_idx];
        let deposited = ev.rate * ev.duration;
        let cells_exact = deposited / cfg.cell_size;
        let cells = cells_exact.round() as usize;
        if (cells_exact - cells as f64).abs() > 1e-9 {
            warn!(
                "event {k}: deposited thickness {deposited} m is not a multiple of the cell size; \
                 using {cells} cells"
            );
        }
        let dt = cfg.cell_size / (alpha as f64 * rate_to_si(ev.rate));
        let sub_h = cfg.cell_size / alpha as f64;
        let fresh_weight = mat.bulk_density(mat.phi0, &cfg.fluid) * cfg.g * sub_h;
        for s in 1..=cells * alpha {
            let phase = s % alpha;
            if phase == 0 {
                run.state.push_fresh_cell(cfg.cell_size, top, mat_idx, k + layer_offset, cfg);
            }
            run.step(dt, fresh_weight * phase as f64, phase == 0)?;
        }
        info!(
            "event {k} done at {:.3} Ma: {} cells",
            seconds_to_ma(run.state.time),
            run.state.cell_count()
        );
    }

    if let Some(q) = &cfg.quiescent {
        let dt = ma_to_seconds(q.duration) / q.steps.max(1) as f64;
        for _ in 0..q.steps.max(1) {
            run.step(dt, 0.0, false)?;
        }
    }

    Ok(SolveReport {
        steps: run.steps,
        snapshots: run.snapshots,
        final_state: run.state,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs the whole scenario from its initial state.
pub fn simulate(cfg: &ScenarioConfig, opts: &SimulationOptions) -> Result<SolveReport> {
    advance_time(initial_state(cfg)?, cfg, opts)
}
