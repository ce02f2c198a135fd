use std::path::PathBuf;

use basin_uq::aligned::stats::cdf_distance;
use basin_uq::aligned::{Field, ModelRun, TwoStepSurrogate};
use basin_uq::harness::{run_experiment, Budget, ExperimentKind, ExperimentSpec, GridShape, Knots, RunManifest};
use basin_uq::solver::{simulate as solve, SimulationOptions};
use basin_uq::sparse_grid::{SparseGrid as CoreGrid, SparseGridSurrogate};
use basin_uq::{load_scenario, Error, ScenarioConfig};
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Indices = Vec<Option<Vec<f64>>>;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::NonFinite { .. } | Error::Singular(_) | Error::Evaluation { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A scenario file: materials, deposition history and uncertain parameters.
#[pyclass(module = "basin_uq", frozen)]
#[derive(Clone)]
struct Scenario {
    cfg: ScenarioConfig,
    path: Option<PathBuf>,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let cfg = load_scenario(&path).map_err(to_py)?;
        Ok(Scenario { cfg, path: Some(path) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg = ScenarioConfig::from_json_str(text, std::path::Path::new("<string>")).map_err(to_py)?;
        Ok(Scenario { cfg, path: None })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.cfg.name
    }

    #[getter]
    fn layer_count(&self) -> usize {
        self.cfg.layer_count()
    }

    #[getter]
    fn total_time_ma(&self) -> f64 {
        self.cfg.total_time_ma()
    }

    #[getter]
    fn parameter_names(&self) -> Vec<String> {
        self.cfg.uncertain.iter().map(|u| u.name.clone()).collect()
    }

    #[getter]
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.cfg.uncertain.iter().map(|u| (u.min, u.max)).collect()
    }

    /// Copy with named fields replaced, e.g. `{"k2_sh": 8.0}`.
    fn with_overrides(&self, values: Vec<(String, f64)>) -> PyResult<Self> {
        let cfg = self.cfg.with_overrides(&values).map_err(to_py)?;
        Ok(Scenario { cfg, path: self.path.clone() })
    }

    fn __repr__(&self) -> String {
        format!("Scenario(name={:?}, layers={}, parameters={:?})", self.cfg.name, self.cfg.layer_count(), self.parameter_names())
    }
}

/// Final state of one forward run.
#[pyclass(module = "basin_uq", frozen, get_all)]
struct Profile {
    z_center: Vec<f64>,
    phi: Vec<f64>,
    phi_m: Vec<f64>,
    phi_q: Vec<f64>,
    pressure: Vec<f64>,
    hydrostatic: Vec<f64>,
    temperature: Vec<f64>,
    material: Vec<String>,
    /// Interface elevations, seafloor first.
    interfaces: Vec<f64>,
    iterations: usize,
}

/// Runs the forward model. `params` sets the uncertain parameters in
/// scenario order; without it the scenario values are used as written.
#[pyfunction]
#[pyo3(signature = (scenario, params=None))]
fn simulate(py: Python<'_>, scenario: &Scenario, params: Option<Vec<f64>>) -> PyResult<Profile> {
    let cfg = &scenario.cfg;
    let run = py
        .allow_threads(|| match &params {
            Some(p) => ModelRun::solve(cfg, p),
            None => solve(cfg, &SimulationOptions::default()).and_then(|r| {
                let interfaces = basin_uq::solver::extract_interfaces(&r.final_state, cfg.layer_count())?;
                Ok(ModelRun {
                    params: Vec::new(),
                    interfaces,
                    iterations: r.total_iterations(),
                    state: r.final_state,
                })
            }),
        })
        .map_err(to_py)?;
    let st = &run.state;
    Ok(Profile {
        z_center: (0..st.cell_count()).map(|i| st.cell_center(i)).collect(),
        phi: st.phi.clone(),
        phi_m: st.phi_m.clone(),
        phi_q: st.phi_q.clone(),
        pressure: st.p.clone(),
        hydrostatic: st.hydrostatic_pressure(cfg),
        temperature: st.t.clone(),
        material: st.material.iter().map(|&m| cfg.materials[m].id.clone()).collect(),
        interfaces: run.interfaces.clone(),
        iterations: run.iterations,
    })
}

fn make_grid(dim: usize, w: f64, knots: &str, weights: Option<Vec<f64>>) -> Result<CoreGrid, Error> {
    let shape = match weights {
        Some(weights) => GridShape::Aniso { weights },
        None => GridShape::Iso,
    };
    CoreGrid::new(shape.index_set(dim, w)?, Knots::parse(knots)?.family())
}

/// Combination-technique sparse grid on [-1, 1]^dim.
#[pyclass(module = "basin_uq", frozen)]
struct SparseGrid {
    grid: CoreGrid,
}

#[pymethods]
impl SparseGrid {
    #[new]
    #[pyo3(signature = (dim, w, knots="gl", weights=None))]
    fn new(dim: usize, w: f64, knots: &str, weights: Option<Vec<f64>>) -> PyResult<Self> {
        Ok(SparseGrid {
            grid: make_grid(dim, w, knots, weights).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.grid.points().to_vec()
    }

    /// Quadrature weights for the uniform density; they sum to one.
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.grid.quadrature_weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.grid.len()
    }
}

/// Sparse-grid interpolant of vector-valued model outputs.
#[pyclass(module = "basin_uq", frozen)]
struct Surrogate {
    inner: SparseGridSurrogate,
}

#[pymethods]
impl Surrogate {
    /// Builds from outputs at `collocation_points(grid, bounds)`, one row per point.
    #[staticmethod]
    fn from_values(grid: &SparseGrid, bounds: Vec<(f64, f64)>, names: Vec<String>, values: Vec<Vec<f64>>) -> PyResult<Self> {
        let space = basin_uq::ParameterSpace::new(bounds).map_err(to_py)?;
        let inner = SparseGridSurrogate::from_values(grid.grid.clone(), space, names, values).map_err(to_py)?;
        Ok(Surrogate { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Surrogate {
            inner: SparseGridSurrogate::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn __call__(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.evaluate(&p).map_err(to_py)
    }

    fn mean(&self) -> Vec<f64> {
        self.inner.mean()
    }

    fn variance(&self) -> Vec<f64> {
        self.inner.variance()
    }

    /// `(first_order, total)` per output; `None` where the output is constant.
    fn sobol(&self) -> (Indices, Indices) {
        let r = self.inner.pce().sobol();
        (r.first_order, r.total)
    }
}

#[pyfunction]
fn collocation_points(grid: &SparseGrid, bounds: Vec<(f64, f64)>) -> PyResult<Vec<Vec<f64>>> {
    let space = basin_uq::ParameterSpace::new(bounds).map_err(to_py)?;
    Ok(SparseGridSurrogate::collocation_points(&grid.grid, &space))
}

/// Interface surrogate plus layer-aligned field surrogates, as written by
/// the `build-surrogate` experiment.
#[pyclass(module = "basin_uq", frozen)]
struct AlignedSurrogate {
    inner: TwoStepSurrogate,
}

#[pymethods]
impl AlignedSurrogate {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(AlignedSurrogate {
            inner: TwoStepSurrogate::load(&path).map_err(to_py)?,
        })
    }

    /// Predicted interface elevations, seafloor first.
    fn interfaces(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.interfaces.predict(&p).map_err(to_py)?.depths)
    }

    /// Material id at elevation `z`.
    fn material(&self, z: f64, p: Vec<f64>) -> PyResult<String> {
        Ok(self.inner.interfaces.classify_material(z, &p).map_err(to_py)?.to_string())
    }

    fn predict(&self, field: &str, z: f64, p: Vec<f64>) -> PyResult<f64> {
        let f = Field::parse(field).map_err(to_py)?;
        self.inner.predict(f, z, &p).map_err(to_py)
    }
}

fn kind(name: &str) -> PyResult<ExperimentKind> {
    [
        ExperimentKind::Simulate,
        ExperimentKind::Robustness,
        ExperimentKind::BuildSurrogate,
        ExperimentKind::Convergence,
        ExperimentKind::Sobol,
        ExperimentKind::Classify,
        ExperimentKind::Pdf,
        ExperimentKind::McValidate,
    ]
    .into_iter()
    .find(|k| k.name() == name)
    .ok_or_else(|| PyValueError::new_err(format!("unknown experiment `{name}`")))
}

fn manifest_dict<'py>(py: Python<'py>, m: &RunManifest) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("experiment", &m.experiment)?;
    d.set_item("config_hash", &m.config_hash)?;
    d.set_item("seed", m.seed)?;
    d.set_item("failures", m.failures)?;
    d.set_item("evaluations", m.evaluations.clone())?;
    d.set_item("wall_time_s", m.wall_time_s.clone())?;
    let files: Vec<(String, u64, String)> = m.files.iter().map(|f| (f.path.clone(), f.bytes, f.sha256.clone())).collect();
    d.set_item("files", files)?;
    Ok(d)
}

/// Runs one experiment and returns its manifest as a dict. Options mirror
/// the command-line flags.
#[pyfunction]
#[pyo3(signature = (experiment, scenario, out, *, grid="aniso:4,4,1", w=None, knots="gl", samples=None, seed=None, paper_scale=false, params=Vec::new(), depths=None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    experiment: &str,
    scenario: PathBuf,
    out: PathBuf,
    grid: &str,
    w: Option<Vec<f64>>,
    knots: &str,
    samples: Option<usize>,
    seed: Option<u64>,
    paper_scale: bool,
    params: Vec<(String, f64)>,
    depths: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = ExperimentSpec::new(kind(experiment)?, scenario, out);
    spec.grid.shape = GridShape::parse(grid).map_err(to_py)?;
    spec.grid.knots = Knots::parse(knots).map_err(to_py)?;
    if let Some(w) = w {
        spec.grid.w = w;
    }
    if paper_scale {
        spec.budget = Budget::paper();
    }
    if let Some(n) = samples {
        spec.budget.samples = n;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(d) = depths {
        spec.depths = d;
    }
    spec.params = params;
    let m = py.allow_threads(|| run_experiment(&spec)).map_err(to_py)?;
    manifest_dict(py, &m)
}

/// Kolmogorov-Smirnov distance between two samples.
#[pyfunction]
fn ks_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    cdf_distance(&a, &b).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "basin_uq")]
fn basin_uq_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Profile>()?;
    m.add_class::<SparseGrid>()?;
    m.add_class::<Surrogate>()?;
    m.add_class::<AlignedSurrogate>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(collocation_points, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance, m)?)?;
    Ok(())
}
