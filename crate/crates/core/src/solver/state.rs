use serde::{Deserialize, Serialize};

use crate::scenario::ScenarioConfig;

/// Unknowns stored per cell slot in the packed vector.
pub(crate) const SLOT: usize = 8;

/// Offsets inside a slot. Node unknowns of node `i` and cell unknowns of
/// cell `i` share slot `i`; the top node owns a truncated final slot.
pub(crate) mod off {
    pub const Z: usize = 0;
    pub const US: usize = 1;
    pub const UD: usize = 2;
    pub const PHI_Q: usize = 3;
    pub const PHI_M: usize = 4;
    pub const PHI: usize = 5;
    pub const S: usize = 6;
    pub const P: usize = 7;
}

/// Discrete state of the basin on the Lagrangian mesh.
///
/// Nodes are numbered bottom to top (`z[0]` is the basement, `z[n]` the
/// seafloor); cell `i` lies between nodes `i` and `i + 1`. Elevations are
/// negative below sea level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinState {
    /// Elapsed time, s.
    pub time: f64,
    /// Node elevations, m.
    pub z: Vec<f64>,
    /// Solid velocity at nodes, m/s.
    pub u_s: Vec<f64>,
    /// Darcy flux at nodes (positive upward), m/s.
    pub u_d: Vec<f64>,
    /// Precipitated quartz volume fraction per cell.
    pub phi_q: Vec<f64>,
    /// Mechanical porosity per cell.
    pub phi_m: Vec<f64>,
    /// Effective porosity per cell.
    pub phi: Vec<f64>,
    /// Total vertical load (lithostatic plus water column), Pa.
    pub s: Vec<f64>,
    /// Pore pressure, Pa.
    pub p: Vec<f64>,
    /// Temperature, K.
    pub t: Vec<f64>,
    /// Index into the scenario material table.
    pub material: Vec<usize>,
    /// Depositional layer each cell came from (0 = oldest).
    pub layer: Vec<usize>,
    /// Porosity recorded when quartz cementation switched on.
    pub phi_act: Vec<Option<f64>>,
}

impl BasinState {
    pub fn empty() -> Self {
        BasinState {
            time: 0.0,
            z: Vec::new(),
            u_s: Vec::new(),
            u_d: Vec::new(),
            phi_q: Vec::new(),
            phi_m: Vec::new(),
            phi: Vec::new(),
            s: Vec::new(),
            p: Vec::new(),
            t: Vec::new(),
            material: Vec::new(),
            layer: Vec::new(),
            phi_act: Vec::new(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.phi.len()
    }

    pub fn cell_size(&self, i: usize) -> f64 {
        self.z[i + 1] - self.z[i]
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        0.5 * (self.z[i] + self.z[i + 1])
    }

    pub fn top(&self) -> f64 {
        *self.z.last().expect("state has no nodes")
    }

    pub fn bottom(&self) -> f64 {
        self.z[0]
    }

    /// Effective stress per cell, Pa.
    pub fn sigma_c(&self) -> Vec<f64> {
        self.s.iter().zip(&self.p).map(|(s, p)| s - p).collect()
    }

    /// Hydrostatic pore pressure at each cell center.
    pub fn hydrostatic_pressure(&self, cfg: &ScenarioConfig) -> Vec<f64> {
        let top = self.top();
        (0..self.cell_count())
            .map(|i| cfg.top_pressure() + cfg.fluid.rho_l * cfg.g * (top - self.cell_center(i)))
            .collect()
    }

    /// Total solid mass per unit area, kg/m^2.
    pub fn solid_mass(&self, cfg: &ScenarioConfig) -> f64 {
        (0..self.cell_count())
            .map(|i| {
                (1.0 - self.phi[i]) * cfg.materials[self.material[i]].rho_s * self.cell_size(i)
            })
            .sum()
    }

    pub(crate) fn packed_len(&self) -> usize {
        SLOT * self.cell_count() + 3
    }

    pub(crate) fn pack(&self) -> Vec<f64> {
        let n = self.cell_count();
        let mut x = vec![0.0; self.packed_len()];
        for i in 0..=n {
            let b = SLOT * i;
            x[b + off::Z] = self.z[i];
            x[b + off::US] = self.u_s[i];
            x[b + off::UD] = self.u_d[i];
            if i < n {
                x[b + off::PHI_Q] = self.phi_q[i];
                x[b + off::PHI_M] = self.phi_m[i];
                x[b + off::PHI] = self.phi[i];
                x[b + off::S] = self.s[i];
                x[b + off::P] = self.p[i];
            }
        }
        x
    }

    pub(crate) fn unpack_from(&mut self, x: &[f64]) {
        let n = self.cell_count();
        debug_assert_eq!(x.len(), self.packed_len());
        for i in 0..=n {
            let b = SLOT * i;
            self.z[i] = x[b + off::Z];
            self.u_s[i] = x[b + off::US];
            self.u_d[i] = x[b + off::UD];
            if i < n {
                self.phi_q[i] = x[b + off::PHI_Q];
                self.phi_m[i] = x[b + off::PHI_M];
                self.phi[i] = x[b + off::PHI];
                self.s[i] = x[b + off::S];
                self.p[i] = x[b + off::P];
            }
        }
    }

    /// Appends a fresh cell of thickness `h` on top after translating the
    /// existing column down by `h`, so the seafloor stays at `top`.
    pub fn push_fresh_cell(
        &mut self,
        h: f64,
        top: f64,
        material: usize,
        layer: usize,
        cfg: &ScenarioConfig,
    ) {
        let mat = &cfg.materials[material];
        for z in &mut self.z {
            *z -= h;
        }
        if self.z.is_empty() {
            self.z.push(top - h);
            self.u_s.push(0.0);
            self.u_d.push(0.0);
        }
        self.z.push(top);
        self.u_s.push(0.0);
        self.u_d.push(0.0);
        let p = cfg.top_pressure() + cfg.fluid.rho_l * cfg.g * 0.5 * h;
        self.phi_q.push(0.0);
        self.phi_m.push(mat.phi0);
        self.phi.push(mat.phi0);
        // Load equals pressure so the depositional state is stress free; the
        // solve establishes the actual load from the overburden recursion.
        self.s.push(p);
        self.p.push(p);
        self.t.push(cfg.t_top);
        self.material.push(material);
        self.layer.push(layer);
        self.phi_act.push(None);
    }
}
