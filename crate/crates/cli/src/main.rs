use std::path::PathBuf;
use std::process::ExitCode;

use basin_uq::harness::{run_experiment, Budget, ExperimentKind, ExperimentSpec, GridShape, Knots, RunManifest};
use basin_uq::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "basin-uq", version, about = "Basin compaction model and sparse-grid UQ experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single forward run with profile snapshots
    Simulate(Common),
    /// Newton convergence and overpressure for a sweep of permeability blends
    Robustness(Common),
    /// Interface and aligned field surrogates from collocation runs
    BuildSurrogate(Common),
    /// Mean and max errors of interface surrogates against grid size
    Convergence(Common),
    /// Sobol indices of the interface depths
    Sobol(Common),
    /// Material frequency and misclassification profiles
    Classify(Common),
    /// Porosity densities, CDF distances and scatter data at fixed depths
    Pdf(Common),
    /// Paired full-model and surrogate Monte Carlo samples
    McValidate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory [default: out/<subcommand>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Index set: `iso` or `aniso:<w1>,<w2>,...`
    #[arg(long, default_value = "aniso:4,4,1")]
    grid: String,
    /// Sparse-grid levels, comma separated
    #[arg(long, value_delimiter = ',')]
    w: Option<Vec<f64>>,
    /// Knot family: gl or cc
    #[arg(long, default_value = "gl")]
    knots: String,
    /// Monte Carlo sample size
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensemble runs [default: all cores]
    #[arg(long)]
    jobs: Option<usize>,
    /// Full sample sizes instead of the desk-scale defaults
    #[arg(long)]
    paper_scale: bool,
    /// Parameter overrides `name=value`, comma separated
    #[arg(long, value_delimiter = ',')]
    params: Vec<String>,
    /// Snapshot times in Ma, comma separated
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<f64>,
    /// Depths (m, negative) for `pdf`, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    depths: Option<Vec<f64>>,
    /// Permeability blends for `robustness`, comma separated
    #[arg(long, value_delimiter = ',')]
    blends: Option<Vec<f64>>,
}

impl Common {
    fn spec(&self, kind: ExperimentKind) -> Result<ExperimentSpec, Error> {
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
        let mut spec = ExperimentSpec::new(kind, &self.scenario, out);
        spec.grid.shape = GridShape::parse(&self.grid)?;
        spec.grid.knots = Knots::parse(&self.knots)?;
        if let Some(w) = &self.w {
            spec.grid.w = w.clone();
        } else if kind == ExperimentKind::Pdf {
            spec.grid.w = vec![2.0, 6.0, 12.0];
        }
        if self.paper_scale {
            spec.budget = Budget::paper();
        }
        if let Some(n) = self.samples {
            spec.budget.samples = n;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(d) = &self.depths {
            spec.depths = d.clone();
        }
        if let Some(b) = &self.blends {
            spec.blends = b.clone();
        }
        spec.snapshots = self.snapshots.clone();
        spec.params = self
            .params
            .iter()
            .map(|kv| {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Validation(vec![format!("parameter `{kv}` is not name=value")]))?;
                let v = v
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Validation(vec![format!("parameter `{kv}` has a non-numeric value")]))?;
                Ok((k.trim().to_string(), v))
            })
            .collect::<Result<_, Error>>()?;
        Ok(spec)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } | Error::NonFinite { .. } | Error::Singular(_) => 3,
        Error::Evaluation { source, .. } => exit_code(source),
        Error::Io { .. } | Error::Serde(_) => 4,
        _ => 2,
    }
}

fn report(m: &RunManifest, dir: &std::path::Path) {
    println!("{}: wrote {} files to {}", m.experiment, m.files.len(), dir.display());
    for f in &m.files {
        println!("  {}  {}", f.sha256, f.path);
    }
    let counts: Vec<String> = m.evaluations.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("  evaluations: {}", counts.join(" "));
    if m.failures > 0 {
        println!("  failures: {} (see log)", m.failures);
    }
    println!("  wall time: {:.1} s", m.wall_time_s.get("total").copied().unwrap_or(0.0));
}

fn run(cli: Cli) -> Result<(), Error> {
    let (kind, common) = match &cli.command {
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
        Command::Robustness(c) => (ExperimentKind::Robustness, c),
        Command::BuildSurrogate(c) => (ExperimentKind::BuildSurrogate, c),
        Command::Convergence(c) => (ExperimentKind::Convergence, c),
        Command::Sobol(c) => (ExperimentKind::Sobol, c),
        Command::Classify(c) => (ExperimentKind::Classify, c),
        Command::Pdf(c) => (ExperimentKind::Pdf, c),
        Command::McValidate(c) => (ExperimentKind::McValidate, c),
    };
    if let Some(n) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Validation(vec![format!("--jobs: {e}")]))?;
    }
    let spec = common.spec(kind)?;
    let manifest = run_experiment(&spec)?;
    report(&manifest, &spec.out);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
