//! Consistency checks of the discrete system: random admissible states and a
//! central finite-difference comparison against the analytic Jacobian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::scenario::ScenarioConfig;

use super::state::{off, BasinState, SLOT};
use super::system::{assemble_jacobian, assemble_residual, variable_scales, StepContext};

/// A plausible random pair `(x, prev)`: a column of `n` cells alternating
/// between the first two materials, with perturbed geometry, porosities,
/// pressures, velocities and temperatures.
pub fn random_state_pair(cfg: &ScenarioConfig, n: usize, seed: u64) -> (BasinState, BasinState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev = BasinState::empty();
    for i in 0..n {
        let mat = usize::from(i % 3 == 1) % cfg.materials.len();
        prev.push_fresh_cell(cfg.cell_size, -cfg.h_sea, mat, i, cfg);
    }
    let hp = prev.hydrostatic_pressure(cfg);
    for i in 0..n {
        let m = &cfg.materials[prev.material[i]];
        prev.phi_m[i] = rng.random_range(m.phi_f + 0.05..m.phi0);
        prev.phi_q[i] = if m.quartz_cementation { rng.random_range(0.0..0.03) } else { 0.0 };
        prev.phi[i] = prev.phi_m[i] - prev.phi_q[i];
        prev.p[i] = hp[i] * rng.random_range(1.0..1.05);
        prev.s[i] = prev.p[i] + rng.random_range(0.0..2e7);
        prev.t[i] = rng.random_range(300.0..420.0);
        prev.phi_act[i] = if prev.t[i] > cfg.quartz.t_c { Some(prev.phi[i] + 0.02) } else { None };
    }
    let mut x = prev.clone();
    for i in 0..=n {
        x.z[i] += if i < n { rng.random_range(-2.0..2.0) } else { 0.0 };
        x.u_s[i] = rng.random_range(-1e-11..1e-11);
        x.u_d[i] = rng.random_range(-1e-11..1e-11);
    }
    for i in 0..n {
        x.phi_m[i] -= rng.random_range(0.0..0.02);
        x.phi_q[i] += if prev.phi_act[i].is_some() { rng.random_range(0.0..0.01) } else { 0.0 };
        x.phi[i] = x.phi_m[i] - x.phi_q[i] + rng.random_range(-1e-3..1e-3);
        x.p[i] *= rng.random_range(0.98..1.02);
        x.s[i] *= rng.random_range(0.98..1.02);
    }
    // Darcy fluxes close to consistent with the pressures, so that the
    // flux rows do not carry residuals far above their linear scale
    let ctx = StepContext { dt: cfg.cell_size / 1e-12, time: 0.0, fresh_load: 0.0 };
    if let Ok(r) = assemble_residual(&x, &prev, &ctx, cfg) {
        for i in 1..=n {
            x.u_d[i] -= r[SLOT * i + off::UD] * cfg.cell_size / ctx.dt;
        }
    }
    (x, prev)
}

/// Largest relative discrepancy between the analytic Jacobian and a central
/// finite-difference Jacobian of the residual. Each entry is measured
/// against the larger of its row and column magnitude.
pub fn jacobian_fd_discrepancy(
    x: &BasinState,
    prev: &BasinState,
    ctx: &StepContext,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    let jac = assemble_jacobian(x, prev, ctx, cfg)?.to_dense();
    let scales = variable_scales(x.cell_count(), cfg, ctx.dt);
    let x0 = x.pack();
    // velocity steps follow the largest flux so that the perturbation
    // stands out against the residual magnitude
    let u_max = x.u_d.iter().chain(&x.u_s).fold(0.0f64, |m, v| m.max(v.abs()));
    let dim = x0.len();
    let mut fd = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        let mut h = 1e-6 * scales[j].max(x0[j].abs());
        if matches!(j % SLOT, off::US | off::UD) {
            h = h.max(1e-6 * u_max);
        }
        let eval = |d: f64| -> Result<Vec<f64>> {
            let mut xs = x0.clone();
            xs[j] += d;
            let mut st = x.clone();
            st.unpack_from(&xs);
            assemble_residual(&st, prev, ctx, cfg)
        };
        let (fp, fm) = (eval(h)?, eval(-h)?);
        for i in 0..dim {
            fd[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let row_max: Vec<f64> = jac.iter().map(|r| r.iter().fold(0.0, |m: f64, v| m.max(v.abs()))).collect();
    let col_max: Vec<f64> = (0..dim)
        .map(|j| jac.iter().fold(0.0, |m: f64, r| m.max(r[j].abs())))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let s = row_max[i].max(col_max[j]);
            if s > 0.0 {
                worst = worst.max((jac[i][j] - fd[i][j]).abs() / s);
            }
        }
    }
    Ok(worst)
}
