use std::collections::BTreeMap;
use std::fs;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aligned::stats::{
    cdf_distance, max_relative_error, mismatch_profile, relative_mean_error, EmpiricalDistribution, FrequencyProfile,
    POROSITY_BANDWIDTH,
};
use crate::aligned::{interface_labels, Field, InterfaceSurrogate, ModelRun, StationGrid, TwoStepSurrogate};
use crate::error::{Error, Result};
use crate::material::blend_permeability_coefficients;
use crate::scenario::{load_scenario, ScenarioConfig};
use crate::solver::{simulate as solve_history, BasinState, SimulationOptions, SolveReport};
use crate::sparse_grid::{PceExpansion, SparseGrid, SparseGridSurrogate};

use super::output::{config_hash, num, Artifacts, RunManifest};
use super::sampling::{uniform_samples, RunCache, RNG_NAME};
use super::spec::{ExperimentKind, ExperimentSpec, GridSettings, GridShape};

/// Stations per layer of the aligned field surrogates.
pub const STATIONS_PER_LAYER: usize = 40;
/// Points of the tabulated densities.
const DENSITY_POINTS: usize = 401;
/// Local density maxima below this fraction of the peak are not modes.
pub const MODE_MIN_HEIGHT: f64 = 0.05;
const OUTSIDE: &str = "outside";

/// Timing, evaluation counts and the file inventory of one experiment.
struct Recorder {
    spec: ExperimentSpec,
    art: Artifacts,
    wall: BTreeMap<String, f64>,
    evals: BTreeMap<String, usize>,
    failures: usize,
    start: Instant,
}

impl Recorder {
    fn new(spec: &ExperimentSpec) -> Result<Self> {
        Ok(Recorder {
            spec: spec.clone(),
            art: Artifacts::create(&spec.out)?,
            wall: BTreeMap::new(),
            evals: BTreeMap::new(),
            failures: 0,
            start: Instant::now(),
        })
    }

    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.wall.entry(phase.to_string()).or_default() += t.elapsed().as_secs_f64();
        out
    }

    fn count(&mut self, what: &str, n: usize) {
        *self.evals.entry(what.to_string()).or_default() += n;
    }

    fn finish(mut self) -> Result<RunManifest> {
        let text = fs::read_to_string(&self.spec.scenario).map_err(|e| Error::io(&self.spec.scenario, e))?;
        self.wall.insert("total".into(), self.start.elapsed().as_secs_f64());
        let manifest = RunManifest {
            experiment: self.spec.kind.name().into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(&self.spec, &text)?,
            seed: self.spec.seed,
            rng: RNG_NAME.into(),
            wall_time_s: self.wall,
            evaluations: self.evals,
            failures: self.failures,
            files: Vec::new(),
        };
        self.art.finish(manifest)
    }
}

/// Scenario of `spec` with its parameter overrides applied.
pub fn load_config(spec: &ExperimentSpec) -> Result<ScenarioConfig> {
    load_scenario(&spec.scenario)?.with_overrides(&spec.params)
}

pub fn open_cache(spec: &ExperimentSpec) -> Result<RunCache> {
    Ok(RunCache::new(load_config(spec)?))
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn material_id(cfg: &ScenarioConfig, m: usize) -> String {
    cfg.materials[m].id.clone()
}

/// Cell rows from the seafloor down.
fn profile_rows(st: &BasinState, cfg: &ScenarioConfig) -> Vec<Vec<String>> {
    let hp = st.hydrostatic_pressure(cfg);
    let sc = st.sigma_c();
    (0..st.cell_count())
        .rev()
        .map(|i| {
            vec![
                num(st.cell_center(i)),
                num(st.phi[i]),
                num(st.phi_m[i]),
                num(st.phi_q[i]),
                num(st.p[i]),
                num(hp[i]),
                num(sc[i]),
                num(st.t[i]),
                material_id(cfg, st.material[i]),
                num(0.5 * (st.u_d[i] + st.u_d[i + 1])),
            ]
        })
        .collect()
}

pub const PROFILE_COLUMNS: [&str; 10] = ["z_center", "phi", "phi_M", "phi_Q", "P", "P_hydro", "sigma_c", "T", "material_id", "u_D"];

fn step_rows(r: &SolveReport) -> Vec<Vec<String>> {
    r.steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            vec![
                (k + 1).to_string(),
                num(s.time_ma),
                num(s.dt),
                s.cells.to_string(),
                s.iterations.to_string(),
                u8::from(s.inserted).to_string(),
            ]
        })
        .collect()
}

const STEP_COLUMNS: [&str; 6] = ["step", "time_ma", "dt_s", "cells", "iterations", "inserted"];

fn default_snapshots(spec: &ExperimentSpec, cfg: &ScenarioConfig) -> Vec<f64> {
    if !spec.snapshots.is_empty() {
        return spec.snapshots.clone();
    }
    let t = cfg.total_time_ma();
    (1..=5).map(|i| t * i as f64 / 5.0).collect()
}

/// One forward run with profile snapshots.
pub fn simulate(spec: &ExperimentSpec) -> Result<(SolveReport, RunManifest)> {
    let cfg = load_config(spec)?;
    let mut rec = Recorder::new(spec)?;
    let opts = SimulationOptions {
        snapshots_ma: spec.snapshots.clone(),
    };
    let report = rec.time("solve", || solve_history(&cfg, &opts))?;
    rec.count("full_model_solves", 1);
    rec.art.csv("steps.csv", &STEP_COLUMNS, &step_rows(&report))?;
    for snap in &report.snapshots {
        let name = format!("profile_t{:.3}.csv", snap.time_ma);
        rec.art.csv(&name, &PROFILE_COLUMNS, &profile_rows(&snap.state, &cfg))?;
    }
    rec.art.csv("profile_final.csv", &PROFILE_COLUMNS, &profile_rows(&report.final_state, &cfg))?;
    let manifest = rec.finish()?;
    Ok((report, manifest))
}

/// Outcome of the solver at one permeability blend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendRun {
    pub blend: f64,
    /// `None` if the run converged.
    pub error: Option<String>,
    pub nonconvergence: bool,
    pub steps: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    /// Iteration range over the second half of the history.
    pub late_iterations: (usize, usize),
    /// Largest `(P - P_hydro) / P_hydro` of the final state.
    pub max_overpressure_ratio: f64,
    /// Final overpressure per cell, seafloor first.
    pub overpressure: Vec<f64>,
    pub wall_time_s: f64,
}

/// Single-layer scenario with every material on the permeability law of
/// `blend` (1 sandstone-like, 0 shale-like).
pub fn blended(cfg: &ScenarioConfig, blend: f64) -> ScenarioConfig {
    let (k1, k2) = blend_permeability_coefficients(blend);
    let mut c = cfg.clone();
    for m in &mut c.materials {
        m.k1 = k1;
        m.k2 = k2;
    }
    c
}

pub fn robustness(spec: &ExperimentSpec) -> Result<(Vec<BlendRun>, RunManifest)> {
    let base = load_config(spec)?;
    let mut rec = Recorder::new(spec)?;
    let opts = SimulationOptions {
        snapshots_ma: default_snapshots(spec, &base),
    };
    let mut runs = Vec::new();
    let mut steps = Vec::new();
    let mut profiles = Vec::new();
    for &a in &spec.blends {
        let cfg = blended(&base, a);
        let t = Instant::now();
        let out = rec.time(&format!("blend_{}", num(a)), || solve_history(&cfg, &opts));
        rec.count("full_model_solves", 1);
        let wall = t.elapsed().as_secs_f64();
        match out {
            Ok(r) => {
                for row in step_rows(&r) {
                    steps.push([vec![num(a)], row].concat());
                }
                let mut states: Vec<(f64, &BasinState)> = r.snapshots.iter().map(|s| (s.time_ma, &s.state)).collect();
                let end = cfg.total_time_ma();
                if states.last().is_none_or(|s| s.0 < end - 1e-9) {
                    states.push((end, &r.final_state));
                }
                for (time, st) in states {
                    let hp = st.hydrostatic_pressure(&cfg);
                    for i in (0..st.cell_count()).rev() {
                        profiles.push(vec![
                            num(a),
                            num(time),
                            num(st.cell_center(i)),
                            num(st.phi[i]),
                            num(st.p[i]),
                            num(hp[i]),
                            num(st.p[i] - hp[i]),
                        ]);
                    }
                }
                let st = &r.final_state;
                let hp = st.hydrostatic_pressure(&cfg);
                let overpressure: Vec<f64> = (0..st.cell_count()).rev().map(|i| st.p[i] - hp[i]).collect();
                let ratio = (0..st.cell_count())
                    .map(|i| (st.p[i] - hp[i]) / hp[i])
                    .fold(0.0f64, f64::max);
                let late = &r.steps[r.steps.len() / 2..];
                let lo = late.iter().map(|s| s.iterations).min().unwrap_or(0);
                let hi = late.iter().map(|s| s.iterations).max().unwrap_or(0);
                runs.push(BlendRun {
                    blend: a,
                    error: None,
                    nonconvergence: false,
                    steps: r.steps.len(),
                    mean_iterations: r.mean_iterations(),
                    max_iterations: r.max_iterations(),
                    late_iterations: (lo, hi),
                    max_overpressure_ratio: ratio,
                    overpressure,
                    wall_time_s: wall,
                });
            }
            Err(e) => {
                log::warn!("blend {a}: {e}");
                rec.failures += 1;
                runs.push(BlendRun {
                    blend: a,
                    nonconvergence: matches!(e, Error::NonConvergence { .. }),
                    error: Some(e.to_string()),
                    steps: 0,
                    mean_iterations: 0.0,
                    max_iterations: 0,
                    late_iterations: (0, 0),
                    max_overpressure_ratio: f64::NAN,
                    overpressure: Vec::new(),
                    wall_time_s: wall,
                });
            }
        }
    }
    let summary: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            vec![
                num(r.blend),
                if r.error.is_none() { "converged" } else { "failed" }.into(),
                r.steps.to_string(),
                num(r.mean_iterations),
                r.max_iterations.to_string(),
                r.late_iterations.0.to_string(),
                r.late_iterations.1.to_string(),
                num(r.max_overpressure_ratio),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    rec.art.csv(
        "robustness_summary.csv",
        &[
            "blend",
            "status",
            "steps",
            "mean_iterations",
            "max_iterations",
            "late_min_iterations",
            "late_max_iterations",
            "max_overpressure_ratio",
            "error",
        ],
        &summary,
    )?;
    let step_header = [&["blend"][..], &STEP_COLUMNS[..]].concat();
    rec.art.csv("robustness_steps.csv", &step_header, &steps)?;
    rec.art.csv(
        "robustness_profiles.csv",
        &["blend", "time_ma", "z_center", "phi", "P", "P_hydro", "overpressure"],
        &profiles,
    )?;
    let manifest = rec.finish()?;
    Ok((runs, manifest))
}

/// Collocation runs of `grid`, recorded as solves of this experiment.
fn collocation(rec: &mut Recorder, cache: &mut RunCache, grid: &SparseGrid, phase: &str) -> Result<Vec<ModelRun>> {
    let points = SparseGridSurrogate::collocation_points(grid, &cache.config().parameter_space());
    let before = cache.solves();
    rec.time(phase, || cache.ensure(&points));
    rec.count("collocation_points", grid.len());
    rec.count("collocation_solves", cache.solves() - before);
    Ok(cache.all(&points)?.into_iter().cloned().collect())
}

/// Monte Carlo full-model runs; failures are logged, counted and excluded.
fn monte_carlo(rec: &mut Recorder, cache: &mut RunCache, spec: &ExperimentSpec) -> McSample {
    let points = uniform_samples(&cache.config().parameter_space(), spec.budget.samples, spec.seed);
    let before = cache.solves();
    rec.time("monte_carlo", || cache.ensure(&points));
    rec.count("mc_samples", points.len());
    rec.count("mc_solves", cache.solves() - before);
    let (runs, failed) = cache.partition(&points);
    let runs = runs.into_iter().map(|(i, r)| (i, r.clone())).collect();
    rec.failures += failed.len();
    rec.count("mc_failures", failed.len());
    McSample { points, runs, failed }
}

struct McSample {
    points: Vec<Vec<f64>>,
    runs: Vec<(usize, ModelRun)>,
    failed: Vec<usize>,
}

fn two_step(
    cfg: &ScenarioConfig,
    grid: &SparseGrid,
    runs: &[ModelRun],
    fields: &[Field],
) -> Result<TwoStepSurrogate> {
    let stations = StationGrid::uniform(cfg.layer_count(), STATIONS_PER_LAYER);
    TwoStepSurrogate::from_runs(grid, cfg, runs, fields, &stations)
}

fn interface_surrogate(cfg: &ScenarioConfig, grid: &SparseGrid, runs: &[ModelRun]) -> Result<InterfaceSurrogate> {
    InterfaceSurrogate::from_runs(grid.clone(), cfg.parameter_space(), runs, cfg)
}

fn collocation_rows(runs: &[ModelRun]) -> Vec<Vec<String>> {
    runs.iter()
        .enumerate()
        .map(|(k, r)| {
            let mut row = vec![k.to_string()];
            row.extend(r.params.iter().map(|&v| num(v)));
            row.extend(r.interfaces.iter().map(|&v| num(v)));
            row.push(r.iterations.to_string());
            row
        })
        .collect()
}

fn collocation_header(cfg: &ScenarioConfig) -> Vec<String> {
    let mut h = vec!["point".to_string()];
    h.extend(cfg.parameter_space().names);
    h.extend(interface_labels(cfg.layer_count() + 1));
    h.push("newton_iterations".into());
    h
}

pub const SURROGATE_FILE: &str = "surrogate.json";

/// Interface and aligned field surrogates on the finest configured grid.
pub fn build_surrogate(spec: &ExperimentSpec, cache: &mut RunCache) -> Result<(TwoStepSurrogate, RunManifest)> {
    let mut rec = Recorder::new(spec)?;
    let cfg = cache.config().clone();
    let grid = spec.grid.grid(cfg.parameter_space().dim(), spec.grid.finest()?)?;
    let runs = collocation(&mut rec, cache, &grid, "collocation")?;
    let s = rec.time("fit", || two_step(&cfg, &grid, &runs, &Field::ALL))?;
    rec.art.csv("collocation.csv", &collocation_header(&cfg), &collocation_rows(&runs))?;
    rec.art.bytes(SURROGATE_FILE, serde_json::to_string(&s.to_document())?.as_bytes())?;
    let manifest = rec.finish()?;
    Ok((s, manifest))
}

/// Errors of one grid in the convergence sweep for one interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub grid: String,
    pub w: f64,
    pub n_coll: usize,
    pub output: String,
    pub e_mean: Option<f64>,
    pub e_max: Option<f64>,
    /// Mean error of a Monte Carlo estimate with `n_coll` full-model runs.
    pub mc_e_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub reference_grid: String,
    pub reference_w: f64,
    pub reference_points: usize,
    pub rows: Vec<ConvergenceRow>,
}

/// Grid shapes of the sweep: isotropic and the weights that favour the
/// last parameter progressively more.
fn sweep_shapes(dim: usize) -> Vec<GridShape> {
    let mut out = vec![GridShape::Iso];
    if dim == 3 {
        for a in [2.0, 3.0, 4.0] {
            out.push(GridShape::Aniso {
                weights: vec![a, a, 1.0],
            });
        }
    }
    out
}

pub fn convergence(spec: &ExperimentSpec, cache: &mut RunCache) -> Result<(ConvergenceReport, RunManifest)> {
    let mut rec = Recorder::new(spec)?;
    let cfg = cache.config().clone();
    let dim = cfg.parameter_space().dim();
    let labels = interface_labels(cfg.layer_count() + 1);

    // reference mean from the smallest grid of the configured shape reaching the budget
    let mut ref_w = spec.grid.finest()?;
    let ref_grid = loop {
        let g = spec.grid.grid(dim, ref_w)?;
        if g.len() >= spec.budget.reference_points {
            break g;
        }
        ref_w += 1.0;
    };
    let ref_runs = collocation(&mut rec, cache, &ref_grid, "reference")?;
    let mu_ref = PceExpansion::from_surrogate(&interface_surrogate(&cfg, &ref_grid, &ref_runs)?.surrogate).mean();
    log::info!("reference grid: w = {ref_w}, {} points", ref_grid.len());

    let mc = monte_carlo(&mut rec, cache, spec);
    let mc_runs: Vec<ModelRun> = mc.runs.into_iter().map(|(_, r)| r).collect();
    if mc_runs.is_empty() {
        return Err(Error::Domain("every Monte Carlo run failed".into()));
    }

    let mut rows = Vec::new();
    let mut counts = Vec::new();
    for shape in sweep_shapes(dim) {
        let settings = GridSettings {
            knots: spec.grid.knots,
            shape: shape.clone(),
            w: Vec::new(),
        };
        let levels: Vec<(f64, SparseGrid)> = if spec.grid.w.len() > 1 {
            spec.grid
                .w
                .iter()
                .map(|&w| Ok((w, settings.grid(dim, w)?)))
                .collect::<Result<_>>()?
        } else {
            let mut v = Vec::new();
            let mut w = 0.0;
            loop {
                let g = settings.grid(dim, w)?;
                if g.len() > spec.budget.max_collocation {
                    break;
                }
                v.push((w, g));
                w += 1.0;
            }
            v
        };
        for (w, grid) in levels {
            counts.push(vec![shape.label(), num(w), grid.len().to_string()]);
            let runs = collocation(&mut rec, cache, &grid, "collocation")?;
            let s = interface_surrogate(&cfg, &grid, &runs)?;
            let mean = PceExpansion::from_surrogate(&s.surrogate).mean();
            let preds: Vec<Vec<f64>> = mc_runs
                .iter()
                .map(|r| s.surrogate.evaluate(&r.params))
                .collect::<Result<_>>()?;
            for (k, label) in labels.iter().enumerate() {
                let sur: Vec<f64> = preds.iter().map(|p| p[k]).collect();
                let full: Vec<f64> = mc_runs.iter().map(|r| r.interfaces[k]).collect();
                let mc_mean = (grid.len() <= full.len())
                    .then(|| full[..grid.len()].iter().sum::<f64>() / grid.len() as f64);
                rows.push(ConvergenceRow {
                    grid: shape.label(),
                    w,
                    n_coll: grid.len(),
                    output: label.clone(),
                    e_mean: relative_mean_error(mean[k], mu_ref[k]).ok(),
                    e_max: max_relative_error(&sur, &full).ok(),
                    mc_e_mean: mc_mean.and_then(|m| relative_mean_error(m, mu_ref[k]).ok()),
                });
            }
        }
    }
    rec.art.csv("convergence_counts.csv", &["grid", "w", "n_coll"], &counts)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.grid.clone(),
                num(r.w),
                r.n_coll.to_string(),
                r.output.clone(),
                opt(r.e_mean),
                opt(r.e_max),
                opt(r.mc_e_mean),
            ]
        })
        .collect();
    rec.art.csv(
        "convergence.csv",
        &["grid", "w", "n_coll", "output", "e_mean", "e_max", "mc_e_mean"],
        &table,
    )?;
    let report = ConvergenceReport {
        reference_grid: spec.grid.shape.label(),
        reference_w: ref_w,
        reference_points: ref_grid.len(),
        rows,
    };
    let manifest = rec.finish()?;
    Ok((report, manifest))
}

/// Sobol indices of every interface depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolTable {
    pub outputs: Vec<String>,
    pub parameters: Vec<String>,
    pub variance: Vec<f64>,
    pub first_order: Vec<Option<Vec<f64>>>,
    pub total: Vec<Option<Vec<f64>>>,
}

impl SobolTable {
    pub fn total_index(&self, output: &str, parameter: &str) -> Option<f64> {
        let o = self.outputs.iter().position(|n| n == output)?;
        let p = self.parameters.iter().position(|n| n == parameter)?;
        self.total[o].as_ref().map(|t| t[p])
    }
}

pub fn sobol(spec: &ExperimentSpec, cache: &mut RunCache) -> Result<(SobolTable, RunManifest)> {
    let mut rec = Recorder::new(spec)?;
    let cfg = cache.config().clone();
    let space = cfg.parameter_space();
    let grid = spec.grid.grid(space.dim(), spec.grid.finest()?)?;
    let runs = collocation(&mut rec, cache, &grid, "collocation")?;
    let s = interface_surrogate(&cfg, &grid, &runs)?;
    let report = rec.time("pce", || PceExpansion::from_surrogate(&s.surrogate).sobol());
    let table = SobolTable {
        outputs: s.surrogate.output_names.clone(),
        parameters: space.names.clone(),
        variance: report.variance,
        first_order: report.first_order,
        total: report.total,
    };
    let mut rows = Vec::new();
    for (o, name) in table.outputs.iter().enumerate() {
        for (p, pname) in table.parameters.iter().enumerate() {
            rows.push(vec![
                name.clone(),
                pname.clone(),
                opt(table.first_order[o].as_ref().map(|v| v[p])),
                opt(table.total[o].as_ref().map(|v| v[p])),
                num(table.variance[o]),
            ]);
        }
    }
    rec.art.csv("sobol.csv", &["output", "parameter", "first_order", "total", "variance"], &rows)?;
    let manifest = rec.finish()?;
    Ok((table, manifest))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub full: FrequencyProfile,
    pub surrogate: FrequencyProfile,
    /// Fraction of samples whose material differs, per depth.
    pub misclassification: Vec<f64>,
    pub samples: usize,
    pub failures: usize,
}

impl ClassifyReport {
    pub fn max_misclassification(&self) -> (f64, f64) {
        self.misclassification
            .iter()
            .zip(&self.full.depths)
            .fold((0.0, f64::NAN), |best, (&m, &z)| if m > best.0 { (m, z) } else { best })
    }
}

/// Material categories: the scenario materials in layer order, then
/// `outside` for depths beyond a column.
fn categories(cfg: &ScenarioConfig) -> Vec<String> {
    let mut c: Vec<String> = Vec::new();
    for m in cfg.layer_materials().into_iter().rev() {
        if !c.contains(&m) {
            c.push(m);
        }
    }
    c.push(OUTSIDE.into());
    c
}

fn category_of(cats: &[String], materials_top_down: &[String], layer: Result<usize>) -> usize {
    let name = match layer {
        Ok(k) => materials_top_down[k].as_str(),
        Err(_) => OUTSIDE,
    };
    cats.iter().position(|c| c == name).expect("known material")
}

pub fn classify(spec: &ExperimentSpec, cache: &mut RunCache) -> Result<(ClassifyReport, RunManifest)> {
    let mut rec = Recorder::new(spec)?;
    let cfg = cache.config().clone();
    let depths = spec.depth_range.depths()?;
    let grid = spec.grid.grid(cfg.parameter_space().dim(), spec.grid.finest()?)?;
    let runs = collocation(&mut rec, cache, &grid, "collocation")?;
    let s = interface_surrogate(&cfg, &grid, &runs)?;
    let cats = categories(&cfg);
    let top_down = s.layer_materials.clone();
    let mc = monte_carlo(&mut rec, cache, spec);
    let mut full = Vec::with_capacity(mc.runs.len());
    let mut sur = Vec::with_capacity(mc.runs.len());
    rec.time("classify", || -> Result<()> {
        for (_, r) in &mc.runs {
            let fmap = r.alignment()?;
            let smap = s.alignment(&r.params)?;
            full.push(depths.iter().map(|&z| category_of(&cats, &top_down, fmap.layer_of(z))).collect());
            sur.push(depths.iter().map(|&z| category_of(&cats, &top_down, smap.layer_of(z))).collect());
        }
        Ok(())
    })?;
    let report = ClassifyReport {
        full: FrequencyProfile::from_labels(depths.clone(), cats.clone(), &full)?,
        surrogate: FrequencyProfile::from_labels(depths.clone(), cats.clone(), &sur)?,
        misclassification: mismatch_profile(&full, &sur)?,
        samples: mc.runs.len(),
        failures: mc.failed.len(),
    };
    let mut header = vec!["z".to_string(), "source".to_string()];
    header.extend(cats.iter().cloned());
    let mut rows = Vec::new();
    for d in 0..depths.len() {
        for (source, f) in [("full", &report.full), ("surrogate", &report.surrogate)] {
            let mut row = vec![num(depths[d]), source.into()];
            row.extend((0..cats.len()).map(|c| num(f.frequency(d, c))));
            rows.push(row);
        }
    }
    rec.art.csv("classify_frequency.csv", &header, &rows)?;
    let miss: Vec<Vec<String>> = depths
        .iter()
        .zip(&report.misclassification)
        .map(|(&z, &m)| vec![num(z), num(m), report.samples.to_string()])
        .collect();
    rec.art.csv("classify_misclassification.csv", &["z", "misclassification", "samples"], &miss)?;
    let manifest = rec.finish()?;
    Ok((report, manifest))
}

/// Surrogate porosity samples of one grid level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdfLevel {
    pub w: f64,
    pub n_coll: usize,
    /// `samples[d][s]`.
    pub samples: Vec<Vec<f64>>,
    /// CDF distance to the full model per depth.
    pub distance: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdfReport {
    pub depths: Vec<f64>,
    /// Full-model porosity `full[d][s]`.
    pub full: Vec<Vec<f64>>,
    pub full_modes: Vec<Vec<f64>>,
    pub levels: Vec<PdfLevel>,
    pub failures: usize,
}

pub fn pdf(spec: &ExperimentSpec, cache: &mut RunCache) -> Result<(PdfReport, RunManifest)> {
    let mut rec = Recorder::new(spec)?;
    let cfg = cache.config().clone();
    let dim = cfg.parameter_space().dim();
    let depths = spec.depths.clone();
    let cats = categories(&cfg);

    let mc = monte_carlo(&mut rec, cache, spec);
    let mut full = vec![Vec::with_capacity(mc.runs.len()); depths.len()];
    let mut full_cat = vec![Vec::with_capacity(mc.runs.len()); depths.len()];
    let mut top_down = cfg.layer_materials();
    top_down.reverse();
    for (_, r) in &mc.runs {
        let prof = r.profile(Field::Porosity, &cfg)?;
        let map = r.alignment()?;
        for (d, &z) in depths.iter().enumerate() {
            full[d].push(prof.value_at(z)?);
            full_cat[d].push(category_of(&cats, &top_down, map.layer_of(z)));
        }
    }
    let dists = full
        .iter()
        .map(|v| EmpiricalDistribution::new(v, POROSITY_BANDWIDTH))
        .collect::<Result<Vec<_>>>()?;
    let full_modes: Vec<Vec<f64>> = dists.iter().map(|d| d.modes(DENSITY_POINTS, MODE_MIN_HEIGHT)).collect();

    let mut levels = Vec::new();
    let mut scatter = Vec::new();
    for &w in &spec.grid.w {
        let grid = spec.grid.grid(dim, w)?;
        let runs = collocation(&mut rec, cache, &grid, "collocation")?;
        let s = rec.time("fit", || two_step(&cfg, &grid, &runs, &[Field::Porosity]))?;
        let mut samples = vec![Vec::with_capacity(mc.runs.len()); depths.len()];
        for (j, (i, r)) in mc.runs.iter().enumerate() {
            let map = s.interfaces.alignment(&r.params)?;
            for (d, &z) in depths.iter().enumerate() {
                let v = s.predict(Field::Porosity, z, &r.params)?;
                samples[d].push(v);
                let c = category_of(&cats, &s.interfaces.layer_materials, map.layer_of(z));
                scatter.push(vec![
                    num(z),
                    num(w),
                    i.to_string(),
                    num(full[d][j]),
                    num(v),
                    cats[full_cat[d][j]].clone(),
                    cats[c].clone(),
                    u8::from(c != full_cat[d][j]).to_string(),
                ]);
            }
        }
        let distance = depths
            .iter()
            .enumerate()
            .map(|(d, _)| cdf_distance(&samples[d], &full[d]))
            .collect::<Result<Vec<_>>>()?;
        let modes = samples
            .iter()
            .map(|v| Ok(EmpiricalDistribution::new(v, POROSITY_BANDWIDTH)?.modes(DENSITY_POINTS, MODE_MIN_HEIGHT)))
            .collect::<Result<Vec<_>>>()?;
        levels.push(PdfLevel {
            w,
            n_coll: grid.len(),
            samples,
            distance,
            modes,
        });
    }

    let mut density = Vec::new();
    let mut mode_rows = Vec::new();
    for (d, &z) in depths.iter().enumerate() {
        let mut curves = vec![("full".to_string(), String::new(), dists[d].clone(), full_modes[d].clone())];
        for l in &levels {
            curves.push((
                "surrogate".into(),
                num(l.w),
                EmpiricalDistribution::new(&l.samples[d], POROSITY_BANDWIDTH)?,
                l.modes[d].clone(),
            ));
        }
        let lo = curves.iter().map(|c| c.2.support(4.0).0).fold(f64::INFINITY, f64::min);
        let hi = curves.iter().map(|c| c.2.support(4.0).1).fold(f64::NEG_INFINITY, f64::max);
        for (source, w, dist, modes) in &curves {
            for (x, p, c) in dist.tabulate(lo, hi, DENSITY_POINTS) {
                density.push(vec![num(z), source.clone(), w.clone(), num(x), num(p), num(c)]);
            }
            for &m in modes {
                mode_rows.push(vec![num(z), source.clone(), w.clone(), num(m)]);
            }
        }
    }
    rec.art.csv("pdf_density.csv", &["z", "source", "w", "phi", "pdf", "cdf"], &density)?;
    rec.art.csv("pdf_modes.csv", &["z", "source", "w", "phi"], &mode_rows)?;
    let mut dist_rows = Vec::new();
    for l in &levels {
        for (d, &z) in depths.iter().enumerate() {
            dist_rows.push(vec![num(z), num(l.w), l.n_coll.to_string(), num(l.distance[d])]);
        }
    }
    rec.art.csv("pdf_distance.csv", &["z", "w", "n_coll", "D"], &dist_rows)?;
    rec.art.csv(
        "pdf_scatter.csv",
        &["z", "w", "sample", "phi_full", "phi_surrogate", "material_full", "material_surrogate", "misclassified"],
        &scatter,
    )?;
    let report = PdfReport {
        depths,
        full,
        full_modes,
        levels,
        failures: mc.failed.len(),
    };
    let manifest = rec.finish()?;
    Ok((report, manifest))
}

/// Paired full-model and surrogate interface depths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McValidation {
    pub outputs: Vec<String>,
    pub samples: usize,
    pub failures: usize,
    pub mean_full: Vec<f64>,
    pub mean_surrogate: Vec<f64>,
    pub max_abs_error: Vec<f64>,
    /// Full-model solves made while evaluating the surrogate (always 0).
    pub surrogate_solves: usize,
}

pub fn mc_validate(spec: &ExperimentSpec, cache: &mut RunCache) -> Result<(McValidation, RunManifest)> {
    let mut rec = Recorder::new(spec)?;
    let cfg = cache.config().clone();
    let space = cfg.parameter_space();
    let grid = spec.grid.grid(space.dim(), spec.grid.finest()?)?;
    let runs = collocation(&mut rec, cache, &grid, "collocation")?;
    let s = interface_surrogate(&cfg, &grid, &runs)?;
    let mc = monte_carlo(&mut rec, cache, spec);
    let labels = s.surrogate.output_names.clone();
    let k = labels.len();

    let before = cache.solves();
    let preds: Vec<Vec<f64>> = rec.time("surrogate", || {
        mc.points.iter().map(|p| s.surrogate.evaluate(p)).collect::<Result<_>>()
    })?;
    let surrogate_solves = cache.solves() - before;

    let mut ok = vec![None; mc.points.len()];
    for (i, r) in &mc.runs {
        ok[*i] = Some(r);
    }
    let mut rows = Vec::new();
    let mut sum_f = vec![0.0; k];
    let mut sum_s = vec![0.0; k];
    let mut max_abs = vec![0.0f64; k];
    for (i, p) in mc.points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.iter().map(|&v| num(v)));
        match ok[i] {
            Some(r) => {
                row.push("ok".into());
                row.extend(r.interfaces.iter().map(|&v| num(v)));
                for j in 0..k {
                    sum_f[j] += r.interfaces[j];
                    sum_s[j] += preds[i][j];
                    max_abs[j] = max_abs[j].max((preds[i][j] - r.interfaces[j]).abs());
                }
            }
            None => {
                row.push("failed".into());
                row.extend((0..k).map(|_| String::new()));
            }
        }
        row.extend(preds[i].iter().map(|&v| num(v)));
        rows.push(row);
    }
    let mut header = vec!["sample".to_string()];
    header.extend(space.names.iter().cloned());
    header.push("status".into());
    header.extend(labels.iter().map(|l| format!("{l}_full")));
    header.extend(labels.iter().map(|l| format!("{l}_surrogate")));
    rec.art.csv("mc_samples.csv", &header, &rows)?;

    let n = mc.runs.len().max(1) as f64;
    let mean_full: Vec<f64> = sum_f.iter().map(|v| v / n).collect();
    let mean_surrogate: Vec<f64> = sum_s.iter().map(|v| v / n).collect();
    let summary: Vec<Vec<String>> = (0..k)
        .map(|j| {
            vec![
                labels[j].clone(),
                num(mean_full[j]),
                num(mean_surrogate[j]),
                opt(relative_mean_error(mean_surrogate[j], mean_full[j]).ok()),
                num(max_abs[j]),
            ]
        })
        .collect();
    rec.art.csv(
        "mc_summary.csv",
        &["output", "mean_full", "mean_surrogate", "relative_mean_error", "max_abs_error"],
        &summary,
    )?;
    rec.count("surrogate_solves", surrogate_solves);
    let report = McValidation {
        outputs: labels,
        samples: mc.runs.len(),
        failures: mc.failed.len(),
        mean_full,
        mean_surrogate,
        max_abs_error: max_abs,
        surrogate_solves,
    };
    let manifest = rec.finish()?;
    Ok((report, manifest))
}

/// Runs the experiment named by `spec.kind` on a fresh cache.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunManifest> {
    Ok(match spec.kind {
        ExperimentKind::Simulate => simulate(spec)?.1,
        ExperimentKind::Robustness => robustness(spec)?.1,
        kind => {
            let mut cache = open_cache(spec)?;
            match kind {
                ExperimentKind::BuildSurrogate => build_surrogate(spec, &mut cache)?.1,
                ExperimentKind::Convergence => convergence(spec, &mut cache)?.1,
                ExperimentKind::Sobol => sobol(spec, &mut cache)?.1,
                ExperimentKind::Classify => classify(spec, &mut cache)?.1,
                ExperimentKind::Pdf => pdf(spec, &mut cache)?.1,
                ExperimentKind::McValidate => mc_validate(spec, &mut cache)?.1,
                ExperimentKind::Simulate | ExperimentKind::Robustness => unreachable!(),
            }
        }
    })
}
