//! Implicit-Euler residual of the coupled compaction system on the
//! Lagrangian mesh, and its analytic Jacobian.
//!
//! Unknowns are interleaved per slot (see [`super::state::off`]) so the
//! Jacobian is banded with half-bandwidths of at most 10. Each equation is
//! stored in the row of one "owner" unknown of the same slot:
//!
//! | row     | equation                                                    |
//! |---------|-------------------------------------------------------------|
//! | `Z_i`   | node kinematics `Z - Z_prev - dt u_s = 0`                   |
//! | `u_s,i` | solid mass of cell `i`; top node: `u_s = 0` (fixed seafloor) |
//! | `u_D,i` | Darcy closure at node `i`; bottom node: `u_D = 0`           |
//! | `phi_Q` | quartz precipitation                                        |
//! | `phi_M` | mechanical compaction along the material path               |
//! | `phi`   | `phi = phi_M - phi_Q`                                       |
//! | `S`     | overburden recursion from the seafloor down                 |
//! | `P`     | pore-fluid mass of cell `i`                                 |
//!
//! Rows are non-dimensionalised by the reference cell size, the time step
//! and a reference hydrostatic pressure increment. Darcy rows are written in
//! pressure form (`u_D / T + dP + rho_l g dz`), which keeps their round-off
//! level independent of the permeability.

use crate::error::{Error, Result};
use crate::material::{permeability_derivative, permeability_unchecked, quartz_step_rate, quartz_step_rate_dphi};
use crate::scenario::ScenarioConfig;

use super::banded::BandMatrix;
use super::state::{off, BasinState, SLOT};

/// Per-step data that is not part of the unknown vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepContext {
    /// Time step, s.
    pub dt: f64,
    /// Time at the end of the step, s.
    pub time: f64,
    /// Extra load at the seafloor from sediment not yet added to the mesh, Pa.
    pub fresh_load: f64,
}

/// Sparse Jacobian in coordinate form (duplicates are summed).
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Jacobian {
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.dim]; self.dim];
        for &(i, j, v) in &self.entries {
            a[i][j] += v;
        }
        a
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        self.entries.iter().fold((0, 0), |(kl, ku), &(i, j, _)| {
            if i > j {
                (kl.max(i - j), ku)
            } else {
                (kl, ku.max(j - i))
            }
        })
    }

    pub(crate) fn to_band(&self) -> BandMatrix {
        let (kl, ku) = self.bandwidths();
        let mut m = BandMatrix::zeros(self.dim, kl, ku);
        for &(i, j, v) in &self.entries {
            m.add(i, j, v);
        }
        m
    }
}

pub(crate) struct Refs {
    pub h: f64,
    pub p: f64,
}

impl Refs {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Refs {
            h: cfg.cell_size,
            p: cfg.fluid.rho_l * cfg.g * cfg.cell_size,
        }
    }
}

/// Characteristic magnitude of each unknown, used for column equilibration
/// and finite-difference step sizes.
pub(crate) fn variable_scales(n_cells: usize, cfg: &ScenarioConfig, dt: f64) -> Vec<f64> {
    let r = Refs::new(cfg);
    let vel = r.h / dt;
    let mut out = vec![1.0; SLOT * n_cells + 3];
    for i in 0..=n_cells {
        let b = SLOT * i;
        out[b + off::Z] = r.h;
        out[b + off::US] = vel;
        out[b + off::UD] = vel;
        if i < n_cells {
            out[b + off::S] = r.p;
            out[b + off::P] = r.p;
        }
    }
    out
}

fn block_name(row: usize, n_cells: usize) -> &'static str {
    let slot = row / SLOT;
    match row % SLOT {
        off::Z => "kinematics",
        off::US if slot == n_cells => "seafloor anchor",
        off::US => "solid mass",
        off::UD => "darcy",
        off::PHI_Q => "quartz",
        off::PHI_M => "mechanical compaction",
        off::PHI => "porosity",
        off::S => "load",
        _ => "fluid mass",
    }
}

/// Conductance of the node between two cells and its partial derivatives
/// with respect to (K_lo, K_hi, h_lo, h_hi).
fn interior_transmissibility(
    k_lo: f64,
    k_hi: f64,
    h_lo: f64,
    h_hi: f64,
    mu: f64,
) -> (f64, [f64; 4]) {
    let d = h_lo * k_hi + h_hi * k_lo;
    if d <= 0.0 {
        return (0.0, [0.0; 4]);
    }
    let t = 2.0 * k_lo * k_hi / (mu * d);
    let d2 = mu * d * d;
    (
        t,
        [
            2.0 * h_lo * k_hi * k_hi / d2,
            2.0 * h_hi * k_lo * k_lo / d2,
            -t * k_hi / d,
            -t * k_lo / d,
        ],
    )
}

/// Evaluates the residual. `meta` supplies the mesh connectivity, materials,
/// temperature and the activation porosity weighted by the active part of
/// the step; `x` the current unknowns.
pub(crate) fn residual_packed(
    x: &[f64],
    meta: &BasinState,
    xp: &[f64],
    ctx: &StepContext,
    cfg: &ScenarioConfig,
    out: &mut [f64],
) -> Result<()> {
    let n = meta.cell_count();
    let r = Refs::new(cfg);
    let dt = ctx.dt;
    let (rho_l, g, mu) = (cfg.fluid.rho_l, cfg.g, cfg.fluid.mu_l);
    let at = |v: &[f64], i: usize, o: usize| v[SLOT * i + o];
    let h = |v: &[f64], i: usize| at(v, i + 1, off::Z) - at(v, i, off::Z);
    let s_top = cfg.top_pressure() + cfg.overburden + ctx.fresh_load;

    for i in 0..=n {
        let b = SLOT * i;
        out[b + off::Z] = (at(x, i, off::Z) - at(xp, i, off::Z) - dt * at(x, i, off::US)) / r.h;
        if i == n {
            out[b + off::US] = at(x, i, off::US) * dt / r.h;
        }
        // Darcy rows in pressure form: u_D / T + (dP/dz + rho_l g) dz
        out[b + off::UD] = if i == 0 {
            at(x, 0, off::UD) * dt / r.h
        } else if i < n {
            let (h_lo, h_hi) = (h(x, i - 1), h(x, i));
            let k_lo = permeability_unchecked(at(x, i - 1, off::PHI), &cfg.materials[meta.material[i - 1]]);
            let k_hi = permeability_unchecked(at(x, i, off::PHI), &cfg.materials[meta.material[i]]);
            let (t, _) = interior_transmissibility(k_lo, k_hi, h_lo, h_hi, mu);
            let grad = at(x, i, off::P) - at(x, i - 1, off::P) + rho_l * g * 0.5 * (h_lo + h_hi);
            (at(x, i, off::UD) / t + grad) / r.p
        } else {
            let h_lo = h(x, n - 1);
            let k_lo = permeability_unchecked(at(x, n - 1, off::PHI), &cfg.materials[meta.material[n - 1]]);
            let t = 2.0 * k_lo / (mu * h_lo);
            let grad = cfg.top_pressure() - at(x, n - 1, off::P) + rho_l * g * 0.5 * h_lo;
            (at(x, n, off::UD) / t + grad) / r.p
        };
    }

    for i in 0..n {
        let b = SLOT * i;
        let mat = &cfg.materials[meta.material[i]];
        let (hi, hp) = (h(x, i), h(xp, i));
        let phi = at(x, i, off::PHI);
        let phi_p = at(xp, i, off::PHI);
        let dq = at(x, i, off::PHI_Q) - at(xp, i, off::PHI_Q);
        let rq = cfg.quartz.rho_q / mat.rho_s;

        out[b + off::US] = ((1.0 - phi) * hi - (1.0 - phi_p) * hp - rq * dq * hi) / r.h;

        let rate = if mat.quartz_cementation {
            quartz_step_rate(phi, meta.phi_act[i], meta.t[i], &cfg.quartz)
        } else {
            0.0
        };
        out[b + off::PHI_Q] = dq - dt * rate;

        let sigma = at(x, i, off::S) - at(x, i, off::P);
        let sigma_p = at(xp, i, off::S) - at(xp, i, off::P);
        let e = mat.phi0 - mat.phi_f;
        // compaction acts on the pore space left open by cement
        let open = phi / at(x, i, off::PHI_M);
        out[b + off::PHI_M] = at(x, i, off::PHI_M) - at(xp, i, off::PHI_M)
            - open * e * ((-mat.beta * sigma).exp() - (-mat.beta * sigma_p).exp());

        out[b + off::PHI] = phi - at(x, i, off::PHI_M) + at(x, i, off::PHI_Q);

        let rho_b = mat.bulk_density(phi, &cfg.fluid);
        out[b + off::S] = if i + 1 == n {
            (at(x, i, off::S) - s_top - g * rho_b * 0.5 * hi) / r.p
        } else {
            let up = &cfg.materials[meta.material[i + 1]];
            let rho_up = up.bulk_density(at(x, i + 1, off::PHI), &cfg.fluid);
            (at(x, i, off::S) - at(x, i + 1, off::S) - 0.5 * g * (rho_b * hi + rho_up * h(x, i + 1)))
                / r.p
        };

        out[b + off::P] = (phi * hi - phi_p * hp
            + dt * (at(x, i + 1, off::UD) - at(x, i, off::UD)))
            / r.h;
    }

    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            block: block_name(k, n),
            index: k / SLOT,
        });
    }
    Ok(())
}

pub(crate) fn jacobian_packed(
    x: &[f64],
    meta: &BasinState,
    xp: &[f64],
    ctx: &StepContext,
    cfg: &ScenarioConfig,
) -> Result<Jacobian> {
    let n = meta.cell_count();
    let r = Refs::new(cfg);
    let dt = ctx.dt;
    let (rho_l, g, mu) = (cfg.fluid.rho_l, cfg.g, cfg.fluid.mu_l);
    let at = |i: usize, o: usize| x[SLOT * i + o];
    let idx = |i: usize, o: usize| SLOT * i + o;
    let h = |i: usize| at(i + 1, off::Z) - at(i, off::Z);

    let mut e: Vec<(usize, usize, f64)> = Vec::with_capacity(40 * (n + 1));
    // d/d h_i expands to the two bounding nodes.
    let push_h = |e: &mut Vec<(usize, usize, f64)>, row: usize, cell: usize, v: f64| {
        e.push((row, idx(cell + 1, off::Z), v));
        e.push((row, idx(cell, off::Z), -v));
    };

    for i in 0..=n {
        let rz = idx(i, off::Z);
        e.push((rz, rz, 1.0 / r.h));
        e.push((rz, idx(i, off::US), -dt / r.h));
        if i == n {
            e.push((idx(n, off::US), idx(n, off::US), dt / r.h));
        }

        let row = idx(i, off::UD);
        if i == 0 {
            e.push((row, row, dt / r.h));
        } else if i < n {
            let (h_lo, h_hi) = (h(i - 1), h(i));
            let (m_lo, m_hi) = (&cfg.materials[meta.material[i - 1]], &cfg.materials[meta.material[i]]);
            let (phi_lo, phi_hi) = (at(i - 1, off::PHI), at(i, off::PHI));
            let k_lo = permeability_unchecked(phi_lo, m_lo);
            let k_hi = permeability_unchecked(phi_hi, m_hi);
            let (t, dt_) = interior_transmissibility(k_lo, k_hi, h_lo, h_hi, mu);
            // d(u/T) = -u/T^2 dT
            let q = -at(i, off::UD) / (t * t) / r.p;
            e.push((row, row, 1.0 / (t * r.p)));
            e.push((row, idx(i, off::P), 1.0 / r.p));
            e.push((row, idx(i - 1, off::P), -1.0 / r.p));
            e.push((row, idx(i - 1, off::PHI), q * dt_[0] * permeability_derivative(phi_lo, m_lo)));
            e.push((row, idx(i, off::PHI), q * dt_[1] * permeability_derivative(phi_hi, m_hi)));
            push_h(&mut e, row, i - 1, q * dt_[2] + 0.5 * rho_l * g / r.p);
            push_h(&mut e, row, i, q * dt_[3] + 0.5 * rho_l * g / r.p);
        } else {
            let h_lo = h(n - 1);
            let m_lo = &cfg.materials[meta.material[n - 1]];
            let phi_lo = at(n - 1, off::PHI);
            let k_lo = permeability_unchecked(phi_lo, m_lo);
            let t = 2.0 * k_lo / (mu * h_lo);
            let u = at(n, off::UD);
            e.push((row, row, 1.0 / (t * r.p)));
            e.push((row, idx(n - 1, off::P), -1.0 / r.p));
            e.push((row, idx(n - 1, off::PHI), -u / (t * t) * 2.0 * permeability_derivative(phi_lo, m_lo) / (mu * h_lo) / r.p));
            push_h(&mut e, row, n - 1, (u / (t * h_lo) + 0.5 * rho_l * g) / r.p);
        }
    }

    for i in 0..n {
        let mat = &cfg.materials[meta.material[i]];
        let hi = h(i);
        let phi = at(i, off::PHI);
        let rq = cfg.quartz.rho_q / mat.rho_s;

        // solid mass
        let row = idx(i, off::US);
        let dq = at(i, off::PHI_Q) - xp[idx(i, off::PHI_Q)];
        push_h(&mut e, row, i, (1.0 - phi - rq * dq) / r.h);
        e.push((row, idx(i, off::PHI), -hi / r.h));
        e.push((row, idx(i, off::PHI_Q), -rq * hi / r.h));

        // quartz
        let row = idx(i, off::PHI_Q);
        e.push((row, row, 1.0));
        if mat.quartz_cementation {
            let d = quartz_step_rate_dphi(meta.phi_act[i], meta.t[i], &cfg.quartz);
            if d != 0.0 {
                e.push((row, idx(i, off::PHI), -dt * d));
            }
        }

        // mechanical compaction
        let row = idx(i, off::PHI_M);
        let sigma = at(i, off::S) - at(i, off::P);
        let sigma_p = xp[idx(i, off::S)] - xp[idx(i, off::P)];
        let eps = mat.phi0 - mat.phi_f;
        let delta = eps * ((-mat.beta * sigma).exp() - (-mat.beta * sigma_p).exp());
        let phi_m = at(i, off::PHI_M);
        let open = phi / phi_m;
        let ds = open * eps * mat.beta * (-mat.beta * sigma).exp();
        e.push((row, row, 1.0 + open * delta / phi_m));
        e.push((row, idx(i, off::PHI), -delta / phi_m));
        e.push((row, idx(i, off::S), ds));
        e.push((row, idx(i, off::P), -ds));

        // porosity
        let row = idx(i, off::PHI);
        e.push((row, row, 1.0));
        e.push((row, idx(i, off::PHI_M), -1.0));
        e.push((row, idx(i, off::PHI_Q), 1.0));

        // load
        let row = idx(i, off::S);
        let rho_b = mat.bulk_density(phi, &cfg.fluid);
        e.push((row, row, 1.0 / r.p));
        e.push((row, idx(i, off::PHI), -0.5 * g * (rho_l - mat.rho_s) * hi / r.p));
        push_h(&mut e, row, i, -0.5 * g * rho_b / r.p);
        if i + 1 < n {
            let up = &cfg.materials[meta.material[i + 1]];
            let phi_up = at(i + 1, off::PHI);
            let h_up = h(i + 1);
            e.push((row, idx(i + 1, off::S), -1.0 / r.p));
            e.push((row, idx(i + 1, off::PHI), -0.5 * g * (rho_l - up.rho_s) * h_up / r.p));
            push_h(&mut e, row, i + 1, -0.5 * g * up.bulk_density(phi_up, &cfg.fluid) / r.p);
        }

        // fluid mass
        let row = idx(i, off::P);
        e.push((row, idx(i, off::PHI), hi / r.h));
        push_h(&mut e, row, i, phi / r.h);
        e.push((row, idx(i + 1, off::UD), dt / r.h));
        e.push((row, idx(i, off::UD), -dt / r.h));
    }

    if let Some(&(row, _, _)) = e.iter().find(|(_, _, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            block: block_name(row, n),
            index: row / SLOT,
        });
    }
    Ok(Jacobian {
        dim: SLOT * n + 3,
        entries: e,
    })
}

fn check_compatible(x: &BasinState, prev: &BasinState) -> Result<()> {
    if x.cell_count() != prev.cell_count() || x.cell_count() == 0 {
        return Err(Error::Domain(format!(
            "state has {} cells but previous state has {}",
            x.cell_count(),
            prev.cell_count()
        )));
    }
    Ok(())
}

/// Residual of the discrete system at `x` given the converged previous
/// state. Entries are ordered as in the packed unknown vector.
pub fn assemble_residual(
    x: &BasinState,
    prev: &BasinState,
    ctx: &StepContext,
    cfg: &ScenarioConfig,
) -> Result<Vec<f64>> {
    check_compatible(x, prev)?;
    let xv = x.pack();
    let mut out = vec![0.0; xv.len()];
    residual_packed(&xv, x, &prev.pack(), ctx, cfg, &mut out)?;
    Ok(out)
}

/// Analytic Jacobian of [`assemble_residual`] with respect to the packed
/// unknowns (temperature and activation state held fixed).
pub fn assemble_jacobian(
    x: &BasinState,
    prev: &BasinState,
    ctx: &StepContext,
    cfg: &ScenarioConfig,
) -> Result<Jacobian> {
    check_compatible(x, prev)?;
    jacobian_packed(&x.pack(), x, &prev.pack(), ctx, cfg)
}

/// Permutation from the interleaved layout to the block layout
/// `[Z, u_s, phi_Q, phi_M, phi, S, P, u_D]`: entry `k` gives the block-layout
/// position of packed unknown `k`.
pub fn block_layout_permutation(n_cells: usize) -> Vec<usize> {
    let nodes = n_cells + 1;
    let starts = [
        0,
        nodes,
        2 * nodes,
        2 * nodes + n_cells,
        2 * nodes + 2 * n_cells,
        2 * nodes + 3 * n_cells,
        2 * nodes + 4 * n_cells,
        2 * nodes + 5 * n_cells,
    ];
    let mut perm = vec![0; SLOT * n_cells + 3];
    for i in 0..=n_cells {
        let b = SLOT * i;
        perm[b + off::Z] = starts[0] + i;
        perm[b + off::US] = starts[1] + i;
        perm[b + off::UD] = starts[7] + i;
        if i < n_cells {
            perm[b + off::PHI_Q] = starts[2] + i;
            perm[b + off::PHI_M] = starts[3] + i;
            perm[b + off::PHI] = starts[4] + i;
            perm[b + off::S] = starts[5] + i;
            perm[b + off::P] = starts[6] + i;
        }
    }
    perm
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::scenario::load_scenario;
    use crate::solver::diagnostics::{jacobian_fd_discrepancy, random_state_pair};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::path::Path;

    pub(crate) fn multilayer() -> ScenarioConfig {
        load_scenario(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/multilayer.json")).unwrap()
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let cfg = multilayer();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = rng.random_range(1..12);
            let (x, prev) = random_state_pair(&cfg, n, rng.random());
            let ctx = StepContext {
                dt: cfg.event_time_step(0),
                time: 1e13,
                fresh_load: rng.random_range(0.0..3e5),
            };
            let d = jacobian_fd_discrepancy(&x, &prev, &ctx, &cfg).unwrap();
            assert!(d <= 1e-6, "relative Jacobian discrepancy {d:.3e} with {n} cells");
        }
    }

    #[test]
    fn transmissibility_derivatives() {
        let args = [3e-15, 7e-19, 24.0, 19.0];
        let (_, d) = interior_transmissibility(args[0], args[1], args[2], args[3], 1e-3);
        for k in 0..4 {
            let h = 1e-5 * args[k];
            let mut p = args;
            let mut m = args;
            p[k] += h;
            m[k] -= h;
            let tp = interior_transmissibility(p[0], p[1], p[2], p[3], 1e-3).0;
            let tm = interior_transmissibility(m[0], m[1], m[2], m[3], 1e-3).0;
            let fd = (tp - tm) / (2.0 * h);
            assert!((fd - d[k]).abs() <= 1e-6 * d[k].abs(), "{k}: {fd} vs {}", d[k]);
        }
    }

    #[test]
    fn bandwidth_is_bounded() {
        let cfg = multilayer();
        let (x, prev) = random_state_pair(&cfg, 9, 3);
        let ctx = StepContext { dt: 1e12, time: 1e12, fresh_load: 0.0 };
        let (kl, ku) = assemble_jacobian(&x, &prev, &ctx, &cfg).unwrap().bandwidths();
        assert!(kl <= 2 * SLOT && ku <= 2 * SLOT, "({kl}, {ku})");
    }
}
