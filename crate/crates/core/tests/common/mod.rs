#![allow(dead_code)]

pub mod toy;

use std::path::PathBuf;

use basin_uq::material::blend_permeability_coefficients;
use basin_uq::solver::BasinState;
use basin_uq::{load_scenario, ScenarioConfig};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

pub fn scenario(name: &str) -> ScenarioConfig {
    load_scenario(scenario_path(name)).unwrap()
}

/// Single-layer scenario with the permeability law of blend `alpha`.
pub fn single_layer_blend(alpha: f64) -> ScenarioConfig {
    let mut cfg = scenario("single_layer");
    let (k1, k2) = blend_permeability_coefficients(alpha);
    cfg.materials[0].k1 = k1;
    cfg.materials[0].k2 = k2;
    cfg
}

/// Overburden recursion evaluated independently of the residual: seawater
/// column plus bulk weight above each cell midpoint.
pub fn load_from_porosity(st: &BasinState, cfg: &ScenarioConfig) -> Vec<f64> {
    let n = st.cell_count();
    let mut s = vec![0.0; n];
    let mut above = cfg.top_pressure() + cfg.overburden;
    for i in (0..n).rev() {
        let rho_b = cfg.materials[st.material[i]].bulk_density(st.phi[i], &cfg.fluid);
        let half = 0.5 * rho_b * cfg.g * st.cell_size(i);
        s[i] = above + half;
        above += 2.0 * half;
    }
    s
}
