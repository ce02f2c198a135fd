//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Criteria that fail are
//! reported, not asserted, so the exit status stays 0; set
//! `ACCEPTANCE_STRICT=1` to exit with 1 when any line fails. The classification
//! and distribution checks share one 2000-sample full-model ensemble and
//! dominate the runtime.

mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use basin_uq::harness::{
    classify, mc_validate, open_cache, pdf, robustness, sobol, Budget, ExperimentKind, ExperimentSpec, PdfReport,
    RunCache, RunManifest,
};
use basin_uq::material::mech_equilibrium_porosity;
use basin_uq::solver::diagnostics::{jacobian_fd_discrepancy, random_state_pair};
use basin_uq::solver::{simulate, SimulationOptions, StepContext};
use basin_uq::sparse_grid::{KnotFamily, MultiIndexSet, SparseGrid, SparseGridSurrogate};
use basin_uq::ParameterSpace;
use common::toy::{toy_separation, TOY_A, TOY_B};
use common::{load_from_porosity, scenario, scenario_path};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROBUST_ITER_RANGE: (usize, usize) = (4, 12);
const ROBUST_OVERPRESSURE: f64 = 0.01;
const ROBUST_SECONDS: f64 = 60.0;
const DRAINED_REL: f64 = 0.01;
const DRAINED_CASES: usize = 12;
const JACOBIAN_REL: f64 = 1e-6;
const JACOBIAN_STATES: usize = 20;
const CONSTANT_TOL: f64 = 1e-12;
const MONOMIAL_TOL: f64 = 1e-10;
const MEAN_TOL: f64 = 1e-12;
const VARIANCE_TOL: f64 = 1e-10;
const COEFFICIENT_SETS: usize = 50;
const SOBOL_K2_MIN: f64 = 0.6;
const SOBOL_PSI2_MAX: f64 = 0.05;
const ALIGNED_MAX: f64 = 1e-8;
const PLAIN_MIN_FRACTION: f64 = 0.25;
const MISCLASSIFICATION_MAX: f64 = 0.015;
const MC_SAMPLES: usize = 2000;
const DISTANCE_DEPTHS: [f64; 2] = [-900.0, -2000.0];
const DISTANCE_LEVELS: [f64; 3] = [2.0, 6.0, 12.0];
const DISTANCE_MAX: f64 = 0.05;
const MODE_DEPTH: f64 = -1350.0;
const MODE_TARGETS: [f64; 3] = [0.3, 0.6, 0.75];
const MODE_TOL: f64 = 0.05;

type Outcome = Result<(bool, String), String>;

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn line(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match out {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        self.total += 1;
        self.passed += usize::from(ok);
        println!("{} {name}: {detail} [{secs:.1} s]", if ok { "PASS" } else { "FAIL" });
    }
}

fn e(x: impl std::fmt::Display) -> String {
    x.to_string()
}

fn robustness_line(out: &Path) -> Outcome {
    let spec = ExperimentSpec::new(ExperimentKind::Robustness, scenario_path("single_layer"), out);
    let (runs, _) = robustness(&spec).map_err(e)?;
    let by = |a: f64| runs.iter().find(|r| r.blend == a).ok_or(format!("blend {a} missing"));
    let (tight, open) = (by(0.5)?, by(1.0)?);
    let converged = runs.iter().all(|r| r.error.is_none());
    let (lo, hi) = tight.late_iterations;
    let slowest = runs.iter().map(|r| r.wall_time_s).fold(0.0, f64::max);
    let ok = converged
        && lo >= ROBUST_ITER_RANGE.0
        && hi <= ROBUST_ITER_RANGE.1
        && open.max_overpressure_ratio < ROBUST_OVERPRESSURE
        && slowest < ROBUST_SECONDS;
    Ok((
        ok,
        format!(
            "blend 0.5 late iterations {lo}..{hi} (window {}..{}), blend 1 overpressure {:.2e} of hydrostatic (< {ROBUST_OVERPRESSURE}), all converged: {converged}, slowest run {slowest:.2} s",
            ROBUST_ITER_RANGE.0, ROBUST_ITER_RANGE.1, open.max_overpressure_ratio
        ),
    ))
}

fn drained_line() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..DRAINED_CASES {
        let mut cfg = scenario("single_layer");
        let m = &mut cfg.materials[0];
        m.beta = rng.random_range(5e-8..5e-7);
        m.phi0 = rng.random_range(0.4..0.7);
        m.k2 = -2.0;
        cfg.initial_column.as_mut().unwrap().thickness = 10.0 * rng.random_range(20..80) as f64;
        let st = simulate(&cfg, &SimulationOptions::default()).map_err(e)?.final_state;
        let s = load_from_porosity(&st, &cfg);
        let hp = st.hydrostatic_pressure(&cfg);
        for i in 0..st.cell_count() {
            let expect = mech_equilibrium_porosity(s[i] - hp[i], &cfg.materials[0]);
            worst = worst.max((st.phi[i] - expect).abs() / expect);
        }
    }
    Ok((
        worst <= DRAINED_REL,
        format!("{DRAINED_CASES} random columns, worst cell relative error {worst:.2e} (<= {DRAINED_REL})"),
    ))
}

fn jacobian_line() -> Outcome {
    let cfg = scenario("multilayer");
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..JACOBIAN_STATES {
        let n = rng.random_range(1..16);
        let (x, prev) = random_state_pair(&cfg, n, rng.random());
        let ctx = StepContext {
            dt: cfg.event_time_step(0),
            time: 1e13,
            fresh_load: rng.random_range(0.0..3e5),
        };
        worst = worst.max(jacobian_fd_discrepancy(&x, &prev, &ctx, &cfg).map_err(e)?);
    }
    Ok((
        worst <= JACOBIAN_REL,
        format!("{JACOBIAN_STATES} random states, worst relative discrepancy {worst:.2e} (<= {JACOBIAN_REL:e})"),
    ))
}

fn gl_points(set: MultiIndexSet) -> Result<usize, String> {
    Ok(SparseGrid::new(set, KnotFamily::gauss_legendre()).map_err(e)?.len())
}

fn counts_line() -> Outcome {
    let iso3 = gl_points(MultiIndexSet::isotropic(3, 6.0))?;
    let iso2 = gl_points(MultiIndexSet::isotropic(2, 6.0))?;
    let aniso = gl_points(MultiIndexSet::anisotropic(12.0, &[4.0, 4.0, 1.0]).map_err(e)?)?;
    Ok((
        iso3 == 137 && aniso == 133,
        format!("N=3 iso w=6: {iso3} (expected 137; N=2 iso w=6 gives {iso2}), N=3 aniso [4,4,1] w=12: {aniso} (expected 133)"),
    ))
}

fn cube(n: usize) -> ParameterSpace {
    ParameterSpace::new(vec![(-1.0, 1.0); n]).unwrap()
}

fn surrogate(set: MultiIndexSet, fam: KnotFamily, space: ParameterSpace, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<SparseGridSurrogate, String> {
    let grid = SparseGrid::new(set, fam).map_err(e)?;
    SparseGridSurrogate::build(grid, space, vec!["f".into()], |p| Ok(vec![f(p)])).map_err(e)
}

fn exactness_line() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let families = [KnotFamily::gauss_legendre(), KnotFamily::clenshaw_curtis()];
    let (mut c_err, mut m_err, mut mean_err, mut var_err): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for fam in families {
        for (dim, w) in [(1, 4.0), (2, 4.0), (3, 3.0), (4, 2.0)] {
            let space = ParameterSpace::new(vec![(2.0, 5.0); dim]).unwrap();
            let s = surrogate(MultiIndexSet::isotropic(dim, w), fam, space.clone(), |_| 3.7)?;
            for _ in 0..50 {
                let p: Vec<f64> = (0..dim).map(|_| rng.random_range(2.0..=5.0)).collect();
                c_err = c_err.max((s.evaluate(&p).map_err(e)?[0] - 3.7).abs());
            }
        }
        for set in [MultiIndexSet::isotropic(2, 5.0), MultiIndexSet::anisotropic(6.0, &[1.0, 2.0, 3.0]).map_err(e)?] {
            for _ in 0..10 {
                // degree inside the space reproduced by one tensor grid of the set
                let j = &set.indices()[rng.random_range(0..set.len())];
                let q: Vec<i32> = j.iter().map(|&l| rng.random_range(0..fam.level_size(l)) as i32).collect();
                let mono = |p: &[f64]| q.iter().zip(p).map(|(&k, &x)| x.powi(k)).product::<f64>();
                let s = surrogate(set.clone(), fam, cube(set.dim), mono)?;
                for _ in 0..20 {
                    let p: Vec<f64> = (0..set.dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    m_err = m_err.max((s.evaluate(&p).map_err(e)?[0] - mono(&p)).abs());
                }
            }
        }
        let s = surrogate(MultiIndexSet::isotropic(3, 3.0), fam, cube(3), |p| p[0])?;
        mean_err = mean_err.max(s.mean()[0].abs());
        var_err = var_err.max((s.variance()[0] - 1.0 / 3.0).abs());
    }
    let ok = c_err <= CONSTANT_TOL && m_err <= MONOMIAL_TOL && mean_err <= MEAN_TOL && var_err <= VARIANCE_TOL;
    Ok((
        ok,
        format!("constant {c_err:.1e} (<= {CONSTANT_TOL:e}), monomials {m_err:.1e} (<= {MONOMIAL_TOL:e}), mean of p1 {mean_err:.1e}, variance of p1 {var_err:.1e}"),
    ))
}

fn coefficients_line() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut mismatches = 0;
    let mut bad_sums = 0;
    for trial in 0..COEFFICIENT_SETS {
        let dim = 1 + trial % 4;
        let size = rng.random_range(1..30);
        let mut set = vec![vec![1usize; dim]];
        let mut members: HashSet<Vec<usize>> = set.iter().cloned().collect();
        for _ in 0..size * 20 {
            if set.len() >= size {
                break;
            }
            let mut j = set[rng.random_range(0..set.len())].clone();
            j[rng.random_range(0..dim)] += 1;
            let admissible = (0..dim).all(|d| {
                let mut k = j.clone();
                k[d] -= 1;
                k[d] == 0 || members.contains(&k)
            });
            if admissible && members.insert(j.clone()) {
                set.push(j);
            }
        }
        let coeffs = MultiIndexSet::from_indices(dim, set.clone())
            .map_err(e)?
            .combination_coefficients()
            .map_err(e)?;
        for j in &set {
            let mut c = 0i64;
            for mask in 0u32..(1 << dim) {
                let k: Vec<usize> = (0..dim).map(|d| j[d] + ((mask >> d) & 1) as usize).collect();
                if members.contains(&k) {
                    c += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
                }
            }
            mismatches += usize::from(coeffs.get(j).copied().unwrap_or(0) != c);
        }
        bad_sums += usize::from(coeffs.values().sum::<i64>() != 1);
    }
    Ok((
        mismatches == 0 && bad_sums == 0,
        format!("{COEFFICIENT_SETS} random sets in N <= 4: {mismatches} coefficient mismatches, {bad_sums} sums != 1"),
    ))
}

fn sobol_line(cache: &mut RunCache, out: &Path) -> Outcome {
    let spec = ExperimentSpec::new(ExperimentKind::Sobol, scenario_path("multilayer"), out);
    let (t, _) = sobol(&spec, cache).map_err(e)?;
    let get = |o: &str, p: &str| t.total_index(o, p).ok_or(format!("no index for {o}/{p}"));
    let mut ok = true;
    let mut parts = Vec::new();
    for o in ["psi_3", "psi_4", "psi_5", "psi_6"] {
        let v = get(o, "k2_sh")?;
        ok &= v > SOBOL_K2_MIN;
        parts.push(format!("{o} {v:.3}"));
    }
    let (b, k) = (get("psi_2", "beta_sh")?, get("psi_2", "k2_sh")?);
    ok &= b < SOBOL_PSI2_MAX && k < SOBOL_PSI2_MAX;
    Ok((
        ok,
        format!(
            "S^T(k2_sh): {} (> {SOBOL_K2_MIN}); psi_2 S^T(beta_sh) {b:.1e}, S^T(k2_sh) {k:.1e} (< {SOBOL_PSI2_MAX})",
            parts.join(", ")
        ),
    ))
}

fn toy_line() -> Outcome {
    let (aligned, plain) = toy_separation(5.0, 400, 505);
    let jump = TOY_B - TOY_A;
    Ok((
        aligned <= ALIGNED_MAX && plain >= PLAIN_MIN_FRACTION * jump,
        format!("aligned max error {aligned:.1e} (<= {ALIGNED_MAX:e}), plain max error {:.2} of the jump (>= {PLAIN_MIN_FRACTION})", plain / jump),
    ))
}

fn classify_line(cache: &mut RunCache, out: &Path) -> Outcome {
    let mut spec = ExperimentSpec::new(ExperimentKind::Classify, scenario_path("multilayer"), out);
    spec.budget.samples = MC_SAMPLES;
    let (r, _) = classify(&spec, cache).map_err(e)?;
    let (worst, z) = r.max_misclassification();
    Ok((
        worst <= MISCLASSIFICATION_MAX,
        format!(
            "{} samples ({} failed), worst misclassification {:.2}% at {z} m (<= {:.1}%)",
            r.samples,
            r.failures,
            100.0 * worst,
            100.0 * MISCLASSIFICATION_MAX
        ),
    ))
}

fn pdf_report(cache: &mut RunCache, out: &Path) -> Result<PdfReport, String> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Pdf, scenario_path("multilayer"), out);
    spec.budget.samples = MC_SAMPLES;
    spec.depths = vec![DISTANCE_DEPTHS[0], MODE_DEPTH, DISTANCE_DEPTHS[1]];
    spec.grid.w = DISTANCE_LEVELS.to_vec();
    Ok(pdf(&spec, cache).map_err(e)?.0)
}

fn distance_line(r: &PdfReport) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for z in DISTANCE_DEPTHS {
        let d = r.depths.iter().position(|&v| v == z).ok_or("depth missing")?;
        let ds: Vec<f64> = r.levels.iter().map(|l| l.distance[d]).collect();
        ok &= ds.windows(2).all(|w| w[1] < w[0]) && ds[ds.len() - 1] <= DISTANCE_MAX;
        let txt: Vec<String> = r.levels.iter().zip(&ds).map(|(l, d)| format!("w={} {d:.3}", l.w)).collect();
        parts.push(format!("{z} m: {}", txt.join(", ")));
    }
    Ok((ok, format!("D {} (strictly decreasing, finest <= {DISTANCE_MAX})", parts.join("; "))))
}

fn modes_match(modes: &[f64]) -> bool {
    modes.len() >= MODE_TARGETS.len() && MODE_TARGETS.iter().all(|t| modes.iter().any(|m| (m - t).abs() <= MODE_TOL))
}

fn modes_line(r: &PdfReport) -> Outcome {
    let d = r.depths.iter().position(|&v| v == MODE_DEPTH).ok_or("depth missing")?;
    let full = &r.full_modes[d];
    let finest = r.levels.last().ok_or("no surrogate level")?;
    let sur = &finest.modes[d];
    let fmt = |v: &[f64]| v.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(", ");
    Ok((
        modes_match(full) && modes_match(sur),
        format!(
            "{MODE_DEPTH} m modes: full model [{}], surrogate w={} [{}] (targets {MODE_TARGETS:?} +/- {MODE_TOL})",
            fmt(full),
            finest.w,
            fmt(sur)
        ),
    ))
}

fn csv_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut v = Vec::new();
    for entry in fs::read_dir(dir).map_err(e)? {
        let p = entry.map_err(e)?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            v.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).map_err(e)?));
        }
    }
    v.sort();
    Ok(v)
}

fn reproducibility_line(out: &Path) -> Outcome {
    let mut files = 0;
    let mut differing = Vec::new();
    for kind in [ExperimentKind::McValidate, ExperimentKind::Robustness] {
        let scenario = if kind == ExperimentKind::Robustness { "single_layer" } else { "multilayer" };
        let mut outs = Vec::new();
        for run in ["a", "b"] {
            let mut spec = ExperimentSpec::new(kind, scenario_path(scenario), out.join(kind.name()).join(run));
            spec.budget = Budget {
                samples: 100,
                ..Budget::desk()
            };
            spec.grid.w = vec![8.0];
            // a fresh cache so that every full-model run is repeated
            let m: RunManifest = match kind {
                ExperimentKind::McValidate => mc_validate(&spec, &mut open_cache(&spec).map_err(e)?).map_err(e)?.1,
                _ => robustness(&spec).map_err(e)?.1,
            };
            if !m.verify(&spec.out).map_err(e)?.is_empty() {
                return Ok((false, format!("{} manifest checksums do not verify", kind.name())));
            }
            outs.push(csv_bytes(&spec.out)?);
        }
        files += outs[0].len();
        if outs[0] != outs[1] {
            differing.push(kind.name());
        }
    }
    Ok((
        differing.is_empty(),
        format!("{files} CSV files from two experiments rerun with the same seed; differing: {differing:?}"),
    ))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let out = tmp.path();
    let mut report = Report { passed: 0, total: 0 };

    report.line("solver robustness", || robustness_line(&out.join("robustness")));
    report.line("drained equilibrium", drained_line);
    report.line("jacobian", jacobian_line);
    report.line("collocation counts", counts_line);
    report.line("sparse-grid exactness", exactness_line);
    report.line("combination coefficients", coefficients_line);

    let mut cache = open_cache(&ExperimentSpec::new(ExperimentKind::Sobol, scenario_path("multilayer"), out))
        .expect("multilayer scenario");
    report.line("sobol case B", || sobol_line(&mut cache, &out.join("sobol")));
    report.line("two-step separation", toy_line);
    report.line("classification", || classify_line(&mut cache, &out.join("classify")));
    let pdf = pdf_report(&mut cache, &out.join("pdf"));
    report.line("distribution distance", || distance_line(pdf.as_ref().map_err(Clone::clone)?));
    report.line("multimodality", || modes_line(pdf.as_ref().map_err(Clone::clone)?));
    report.line("reproducibility", || reproducibility_line(&out.join("repro")));

    println!(
        "acceptance: {}/{} criteria passed ({} full-model solves in the shared ensemble)",
        report.passed,
        report.total,
        cache.solves()
    );
    if report.passed < report.total && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
