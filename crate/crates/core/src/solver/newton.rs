//! Monolithic Newton iteration for one implicit time step. The temperature
//! is updated between iterations from the current geometry and fluxes and
//! held fixed inside each linear solve.

use log::debug;

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::units::seconds_to_ma;

use super::state::{off, BasinState, SLOT};
use super::system::{jacobian_packed, residual_packed, variable_scales, StepContext};
use super::thermal::thermal_solve;

const PHI_GUARD: f64 = 1e-12;
const MAX_HALVINGS: usize = 8;

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub state: BasinState,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// Scaled residual norm at the last linearisation point.
    pub residual_norm: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Quartz activation of one cell over a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Activation {
    /// Porosity when the cell first reached the activation temperature.
    pub phi_act: Option<f64>,
    /// Fraction of the step spent above the activation temperature, with
    /// the temperature linear in time between the step ends.
    pub frac: f64,
}

/// Activation of every cell between `prev` and the iterate `cur`. Weighting
/// the rate by the time spent above the threshold, and interpolating the
/// activation porosity to the crossing time, keeps the discrete response
/// continuous in the parameters; a step-wise switch would make it jump
/// whenever a crossing moves to another step.
pub(crate) fn activation(prev: &BasinState, cur: &BasinState, cfg: &ScenarioConfig) -> Vec<Activation> {
    let t_c = cfg.quartz.t_c;
    (0..prev.cell_count())
        .map(|i| {
            if !cfg.materials[prev.material[i]].quartz_cementation {
                return Activation { phi_act: None, frac: 0.0 };
            }
            let (t0, t1) = (prev.t[i], cur.t[i]);
            let frac = match (t0 >= t_c, t1 >= t_c) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                (true, false) => (t0 - t_c) / (t0 - t1),
                (false, true) => (t1 - t_c) / (t1 - t0),
            };
            let phi_act = prev.phi_act[i].or_else(|| {
                (frac > 0.0).then(|| {
                    let s = if t0 >= t_c { 0.0 } else { 1.0 - frac };
                    prev.phi[i] + s * (cur.phi[i] - prev.phi[i])
                })
            });
            Activation { phi_act, frac }
        })
        .collect()
}

/// Activation porosity as seen by the residual: the rate scales with
/// `phi / phi_act`, so a partial step is carried by a proportionally larger
/// value, and an inactive step by none.
fn effective_activation(act: &[Activation]) -> Vec<Option<f64>> {
    act.iter()
        .map(|a| match a.phi_act {
            Some(p) if a.frac > 0.0 => Some(p / a.frac),
            _ => None,
        })
        .collect()
}

/// Advances `prev` by one step. `prev` must already contain any cell added
/// at the start of the step.
pub fn newton_solve(prev: &BasinState, ctx: &StepContext, cfg: &ScenarioConfig) -> Result<NewtonOutcome> {
    let n = prev.cell_count();
    let settings = &cfg.newton;
    let time_ma = seconds_to_ma(ctx.time);
    let fail = |iterations: usize, residual_norm: f64, reason: String| Error::NonConvergence {
        time_ma,
        iterations,
        residual_norm,
        reason,
    };

    let xp = prev.pack();
    let scales = variable_scales(n, cfg, ctx.dt);

    // `meta` carries connectivity, temperature and activation of the iterate
    let mut meta = prev.clone();
    let mut x = xp.clone();
    let mut f = vec![0.0; x.len()];
    let mut f_trial = vec![0.0; x.len()];
    let mut last_norm = f64::NAN;

    for it in 1..=settings.max_iter {
        meta.unpack_from(&x);
        meta.t = thermal_solve(&meta, &prev.t, ctx.dt, cfg)?;
        meta.phi_act = effective_activation(&activation(prev, &meta, cfg));
        residual_packed(&x, &meta, &xp, ctx, cfg, &mut f)?;
        let f_norm = norm(&f);
        last_norm = f_norm;

        let jac = jacobian_packed(&x, &meta, &xp, ctx, cfg)?;
        let mut band = jac.to_band();
        for (j, s) in scales.iter().enumerate() {
            band.scale_col(j, *s);
        }
        let mut rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        for (i, r) in rhs.iter_mut().enumerate() {
            let m = band.row_max_abs(i);
            if m > 0.0 {
                band.scale_row(i, 1.0 / m);
                *r /= m;
            }
        }
        let lu = band.factor()?;
        lu.solve_in_place(&mut rhs);
        let delta: Vec<f64> = rhs.iter().zip(&scales).map(|(y, s)| y * s).collect();
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(fail(it, f_norm, "non-finite Newton update".into()));
        }

        // increment criterion on node positions relative to local cell size,
        // evaluated on the full Newton correction
        let mut crit: f64 = 0.0;
        for i in 0..=n {
            let cell = i.min(n - 1);
            let h = x[SLOT * (cell + 1) + off::Z] - x[SLOT * cell + off::Z];
            crit = crit.max(delta[SLOT * i + off::Z].abs() / h);
        }
        let converged = crit <= settings.tol;

        let admissible = |v: &[f64]| (0..n).all(|i| (PHI_GUARD..=1.0 - PHI_GUARD).contains(&v[SLOT * i + off::PHI]));
        let mut lambda = 1.0;
        let mut trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
        if settings.line_search && !converged {
            let mut halvings = 0;
            loop {
                let ok = admissible(&trial) && residual_packed(&trial, &meta, &xp, ctx, cfg, &mut f_trial).is_ok();
                if (ok && norm(&f_trial) <= f_norm) || halvings == MAX_HALVINGS {
                    break;
                }
                halvings += 1;
                lambda *= 0.5;
                for k in 0..x.len() {
                    trial[k] = x[k] + lambda * delta[k];
                }
            }
        }

        for i in 0..n {
            let phi = trial[SLOT * i + off::PHI];
            if !(PHI_GUARD..=1.0 - PHI_GUARD).contains(&phi) {
                return Err(fail(it, f_norm, format!("porosity {phi:.3e} left the admissible range in cell {i}")));
            }
        }
        x = trial;
        debug!("newton it {it}: |F| = {f_norm:.3e}, dZ/h = {crit:.3e}, lambda = {lambda}");

        if converged {
            meta.unpack_from(&x);
            meta.t = thermal_solve(&meta, &prev.t, ctx.dt, cfg)?;
            meta.time = ctx.time;
            meta.phi_act = activation(prev, &meta, cfg).iter().map(|a| a.phi_act).collect();
            return Ok(NewtonOutcome {
                state: meta,
                iterations: it,
                residual_norm: f_norm,
            });
        }
    }
    Err(fail(
        settings.max_iter,
        last_norm,
        format!("no convergence within {} iterations", settings.max_iter),
    ))
}
