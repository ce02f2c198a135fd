//! Cell-centred heat equation: conduction with harmonic face conductivities,
//! upwinded advection by the pore fluid, basal heat flux and a fixed
//! seafloor temperature.

use crate::error::{Error, Result};
use crate::material::thermal_coefficients;
use crate::scenario::ScenarioConfig;

use super::state::BasinState;

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i` in place of `d`.
pub(crate) fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) -> Result<()> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut beta = b[0];
    if beta == 0.0 {
        return Err(Error::Singular("thermal system: zero pivot in row 0".into()));
    }
    d[0] /= beta;
    for i in 1..n {
        cp[i - 1] = c[i - 1] / beta;
        beta = b[i] - a[i] * cp[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Singular(format!("thermal system: zero pivot in row {i}")));
        }
        d[i] = (d[i] - a[i] * d[i - 1]) / beta;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
    Ok(())
}

/// Temperature at the end of a step of length `dt` (s) on the geometry,
/// porosity and Darcy flux of `state`, starting from `t_prev`.
/// `dt = f64::INFINITY` gives the steady-state profile.
pub fn thermal_solve(
    state: &BasinState,
    t_prev: &[f64],
    dt: f64,
    cfg: &ScenarioConfig,
) -> Result<Vec<f64>> {
    let n = state.cell_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let fluid = &cfg.fluid;
    let rho_c = fluid.rho_l * fluid.c_l;
    let h: Vec<f64> = (0..n).map(|i| state.cell_size(i)).collect();
    let (c_t, k_t): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| thermal_coefficients(state.phi[i], &cfg.materials[state.material[i]], fluid))
        .unzip();

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];

    for i in 0..n {
        if dt.is_finite() {
            let cap = c_t[i] * h[i] / dt;
            b[i] += cap;
            d[i] += cap * t_prev[i];
        }
        if i > 0 {
            let k = 1.0 / (0.5 * h[i - 1] / k_t[i - 1] + 0.5 * h[i] / k_t[i]);
            b[i] += k;
            a[i] -= k;
        } else {
            d[i] += k_t[0] * cfg.g_t;
        }
        if i + 1 < n {
            let k = 1.0 / (0.5 * h[i] / k_t[i] + 0.5 * h[i + 1] / k_t[i + 1]);
            b[i] += k;
            c[i] -= k;
        } else {
            let k = 2.0 * k_t[i] / h[i];
            b[i] += k;
            d[i] += k * cfg.t_top;
        }

        let u = 0.5 * (state.u_d[i] + state.u_d[i + 1]);
        if u > 0.0 {
            if i > 0 {
                let w = rho_c * u * h[i] / (0.5 * (h[i - 1] + h[i]));
                b[i] += w;
                a[i] -= w;
            } else {
                // inflow through the base carries the basal gradient
                d[i] += rho_c * u * h[i] * cfg.g_t;
            }
        } else if u < 0.0 {
            let w = -rho_c * u * h[i];
            if i + 1 < n {
                let w = w / (0.5 * (h[i] + h[i + 1]));
                b[i] += w;
                c[i] -= w;
            } else {
                let w = w / (0.5 * h[i]);
                b[i] += w;
                d[i] += w * cfg.t_top;
            }
        }
    }

    solve_tridiagonal(&a, &b, &c, &mut d)?;
    if let Some(i) = d.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            block: "temperature",
            index: i,
        });
    }
    Ok(d)
}
