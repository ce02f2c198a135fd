//! Scenario configuration: materials, depositional history, boundary
//! conditions, solver settings and uncertain-parameter declarations.
//!
//! Files are JSON documents (see `docs/scenario-schema.md`). Times are given
//! in Ma and sedimentation rates in m/Ma; everything is converted to SI by
//! the accessors used by the solver.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{FluidProperties, MaterialProperties, QuartzKinetics};
use crate::units::{ma_to_seconds, rate_to_si};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepositionEvent {
    /// Id of the depositing material.
    pub material: String,
    /// Event duration, Ma.
    pub duration: f64,
    /// Uncompacted sedimentation rate, m/Ma.
    pub rate: f64,
}

/// A column present at t = 0 (uniform porosity, zero effective stress).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialColumn {
    pub material: String,
    /// Thickness, m.
    pub thickness: f64,
}

/// Period without sedimentation following the depositional events.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuiescentPeriod {
    /// Duration, Ma.
    pub duration: f64,
    /// Number of implicit time steps.
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub line_search: bool,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol: 1e-8,
            max_iter: 50,
            line_search: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertainParameter {
    pub name: String,
    /// Dotted path of the field the value replaces, e.g. `materials.sand.beta`.
    pub target: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub fluid: FluidProperties,
    pub quartz: QuartzKinetics,
    pub materials: Vec<MaterialProperties>,
    #[serde(default)]
    pub initial_column: Option<InitialColumn>,
    /// Depositional events, oldest first.
    #[serde(default)]
    pub layers: Vec<DepositionEvent>,
    #[serde(default)]
    pub quiescent: Option<QuiescentPeriod>,
    /// Sea depth, m.
    pub h_sea: f64,
    /// Constant surcharge on top of the sediments, Pa.
    #[serde(default)]
    pub overburden: f64,
    /// Temperature at the top of the sediments, K.
    pub t_top: f64,
    /// Thermal gradient imposed at the basement, K/m.
    pub g_t: f64,
    #[serde(default = "default_gravity")]
    pub g: f64,
    /// Mesh cell size (uncompacted), m.
    pub cell_size: f64,
    /// A new cell is appended every `alpha_steps` time steps.
    pub alpha_steps: usize,
    #[serde(default)]
    pub newton: NewtonSettings,
    #[serde(default)]
    pub uncertain: Vec<UncertainParameter>,
}

fn default_gravity() -> f64 {
    9.81
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse {
                path: origin.to_path_buf(),
                message: format!(
                    "line {} column {} (field `{}`): {}",
                    inner.line(),
                    inner.column(),
                    field,
                    inner
                ),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.fluid.validate(&mut errors);
        self.quartz.validate(&mut errors);
        if self.materials.is_empty() {
            errors.push("at least one material is required".into());
        }
        for (i, m) in self.materials.iter().enumerate() {
            m.validate(&mut errors);
            if self.materials[..i].iter().any(|o| o.id == m.id) {
                errors.push(format!("duplicate material id `{}`", m.id));
            }
        }
        for (i, ev) in self.layers.iter().enumerate() {
            if self.material_index(&ev.material).is_none() {
                errors.push(format!("layer {i}: unknown material `{}`", ev.material));
            }
            if !(ev.duration > 0.0) {
                errors.push(format!("layer {i}: duration must be positive"));
            }
            if !(ev.rate > 0.0) {
                errors.push(format!("layer {i}: rate must be positive"));
            }
        }
        if let Some(col) = &self.initial_column {
            if self.material_index(&col.material).is_none() {
                errors.push(format!("initial column: unknown material `{}`", col.material));
            }
            if !(col.thickness > 0.0) {
                errors.push("initial column: thickness must be positive".into());
            }
        }
        if let Some(q) = &self.quiescent {
            if !(q.duration > 0.0) || q.steps == 0 {
                errors.push("quiescent period needs a positive duration and steps".into());
            }
        }
        if self.layers.is_empty() && self.initial_column.is_none() {
            errors.push("scenario has neither depositional events nor an initial column".into());
        }
        if !(self.cell_size > 0.0) {
            errors.push("cell_size must be positive".into());
        }
        if self.alpha_steps < 1 {
            errors.push("alpha_steps must be at least 1".into());
        }
        if !(self.overburden >= 0.0) {
            errors.push("overburden must be non-negative".into());
        }
        if !(self.h_sea >= 0.0) {
            errors.push("h_sea must be non-negative".into());
        }
        if !(self.t_top > 0.0) {
            errors.push("t_top must be positive".into());
        }
        if !(self.g > 0.0) {
            errors.push("g must be positive".into());
        }
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 {
            errors.push("newton settings need tol > 0 and max_iter >= 1".into());
        }
        for u in &self.uncertain {
            // min == max freezes the parameter
            if !(u.min <= u.max) {
                errors.push(format!(
                    "uncertain parameter `{}`: empty interval [{}, {}]",
                    u.name, u.min, u.max
                ));
            }
            if let Err(e) = self.clone().set_field(&u.target, 0.5 * (u.min + u.max)) {
                errors.push(format!("uncertain parameter `{}`: {e}", u.name));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn material_index(&self, id: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.id == id)
    }

    pub fn material(&self, id: &str) -> Option<&MaterialProperties> {
        self.materials.iter().find(|m| m.id == id)
    }

    /// Seawater specific weight times depth: the pressure imposed at the top.
    pub fn top_pressure(&self) -> f64 {
        self.fluid.rho_sea * self.g * self.h_sea
    }

    /// Time step (s) used during event `k`.
    pub fn event_time_step(&self, k: usize) -> f64 {
        let ev = &self.layers[k];
        self.cell_size / (self.alpha_steps as f64 * rate_to_si(ev.rate))
    }

    /// Total simulated time, Ma.
    pub fn total_time_ma(&self) -> f64 {
        self.layers.iter().map(|l| l.duration).sum::<f64>()
            + self.quiescent.as_ref().map_or(0.0, |q| q.duration)
    }

    pub fn total_time_seconds(&self) -> f64 {
        ma_to_seconds(self.total_time_ma())
    }

    /// Number of layers tracked as distinct interfaces (initial column counts
    /// as the oldest layer).
    pub fn layer_count(&self) -> usize {
        self.layers.len() + usize::from(self.initial_column.is_some())
    }

    /// Material id of each layer from oldest to youngest.
    pub fn layer_materials(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(c) = &self.initial_column {
            out.push(c.material.clone());
        }
        out.extend(self.layers.iter().map(|l| l.material.clone()));
        out
    }

    pub fn parameter_space(&self) -> ParameterSpace {
        ParameterSpace {
            names: self.uncertain.iter().map(|u| u.name.clone()).collect(),
            intervals: self.uncertain.iter().map(|u| (u.min, u.max)).collect(),
        }
    }

    /// Returns a copy with the uncertain parameters set to `p` (one value per
    /// declared parameter, in declaration order).
    pub fn with_parameters(&self, p: &[f64]) -> Result<ScenarioConfig> {
        if p.len() != self.uncertain.len() {
            return Err(Error::Domain(format!(
                "expected {} parameter values, got {}",
                self.uncertain.len(),
                p.len()
            )));
        }
        let mut cfg = self.clone();
        for (u, &v) in self.uncertain.iter().zip(p) {
            cfg = cfg.set_field(&u.target, v)?;
        }
        Ok(cfg)
    }

    /// Overrides by parameter name or by dotted target path.
    pub fn with_overrides(&self, overrides: &[(String, f64)]) -> Result<ScenarioConfig> {
        let mut cfg = self.clone();
        for (key, v) in overrides {
            let target = self
                .uncertain
                .iter()
                .find(|u| &u.name == key)
                .map(|u| u.target.clone())
                .unwrap_or_else(|| key.clone());
            cfg = cfg.set_field(&target, *v)?;
        }
        Ok(cfg)
    }

    fn set_field(mut self, target: &str, value: f64) -> Result<ScenarioConfig> {
        let parts: Vec<&str> = target.split('.').collect();
        let bad = || Error::Domain(format!("unknown parameter target `{target}`"));
        match parts.as_slice() {
            ["materials", id, field] => {
                let m = self
                    .materials
                    .iter_mut()
                    .find(|m| m.id == *id)
                    .ok_or_else(bad)?;
                let slot = match *field {
                    "rho_s" => &mut m.rho_s,
                    "c_s" => &mut m.c_s,
                    "lambda_s" => &mut m.lambda_s,
                    "phi0" => &mut m.phi0,
                    "phi_f" => &mut m.phi_f,
                    "k1" => &mut m.k1,
                    "k2" => &mut m.k2,
                    "beta" => &mut m.beta,
                    _ => return Err(bad()),
                };
                *slot = value;
            }
            ["h_sea"] => self.h_sea = value,
            ["overburden"] => self.overburden = value,
            ["t_top"] => self.t_top = value,
            ["g_t"] => self.g_t = value,
            ["quartz", field] => {
                let q = &mut self.quartz;
                let slot = match *field {
                    "a0" => &mut q.a0,
                    "a_q" => &mut q.a_q,
                    "b_q" => &mut q.b_q,
                    "t_c" => &mut q.t_c,
                    _ => return Err(bad()),
                };
                *slot = value;
            }
            _ => return Err(bad()),
        }
        Ok(self)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_json_str(&text, path)
}

/// Hyper-rectangle of uniformly distributed, independent parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub names: Vec<String>,
    pub intervals: Vec<(f64, f64)>,
}

impl ParameterSpace {
    /// Builds a space from explicit intervals. Degenerate intervals
    /// (`a == b`) are accepted here and represent frozen parameters.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for (n, &(a, b)) in intervals.iter().enumerate() {
            if !(a <= b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::Domain(format!("interval {n} = [{a}, {b}] is invalid")));
            }
        }
        Ok(ParameterSpace {
            names: (0..intervals.len()).map(|n| format!("p{}", n + 1)).collect(),
            intervals,
        })
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    /// Joint uniform density at `p` (zero outside).
    pub fn density(&self, p: &[f64]) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        self.intervals.iter().map(|&(a, b)| 1.0 / (b - a)).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(&self.intervals).all(|(&x, &(a, b))| {
                let tol = 1e-12 * (b - a).abs().max(a.abs().max(b.abs())).max(1e-300);
                x >= a - tol && x <= b + tol
            })
    }

    /// Maps a point of the unit cube to the space.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.intervals)
            .map(|(&t, &(a, b))| a + (b - a) * t)
            .collect()
    }
}
