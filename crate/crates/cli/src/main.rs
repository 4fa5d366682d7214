use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wigner_corners::airy::{tw_cdf_painleve, tw_table_fredholm, TwMethod, TwTable};
use wigner_corners::chebyshev::{mc_mixed_moments, MomentKind, MomentSpec};
use wigner_corners::diagrams::{builtin_diagram, DiagramSpec, IntegrationMethod, PolytopeProblem};
use wigner_corners::experiments::{run_experiment, ExperimentConfig};
use wigner_corners::paths::exact_mixed_moment;
use wigner_corners::scaling::{ScaledLineEnsemble, ScalingMap};
use wigner_corners::spectra::CornerGrid;
use wigner_corners::verify::{run_criterion, AcceptanceConstants, CRITERIA};
use wigner_corners::{EntryProcessSpec, MatrixPath, SymmetryClass};

/// Corner spectra of time-dependent Wigner matrices at the spectral edge.
#[derive(Parser, Debug)]
#[command(name = "wcorners", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment given by --config, or sample one path's corner spectra.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate of a mixed moment.
    Moments(MomentArgs),
    /// Exact mixed moment by path enumeration.
    Oracle(MomentArgs),
    /// Polytope integral of a diagram.
    Diagram(DiagramArgs),
    /// Tracy-Widom CDF tables on the standard grid.
    Tw(TwArgs),
    /// Run acceptance criteria and print one line per criterion.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(long, value_enum, default_value_t = Kind::ResampledUnimodular)]
    kind: Kind,
    #[arg(long, default_value_t = 2)]
    beta: u8,
}

impl EnsembleArgs {
    fn spec(&self) -> Result<EntryProcessSpec> {
        let beta = SymmetryClass::from_beta(self.beta)?;
        Ok(match self.kind {
            Kind::GaussianOu => EntryProcessSpec::gaussian_ou(beta),
            Kind::ResampledGaussian => EntryProcessSpec::resampled_gaussian(beta),
            Kind::ResampledUnimodular => EntryProcessSpec::unimodular(beta),
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    GaussianOu,
    ResampledGaussian,
    ResampledUnimodular,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Scaling parameter M (without --config).
    #[arg(long, default_value_t = 100)]
    m: u32,
    /// Rescaled times s.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    s: Vec<f64>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    t_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t_max: f64,
    /// Number of top lines written to lines.csv.
    #[arg(long, default_value_t = 5)]
    j_max: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MomentKindArg {
    Plain,
    Modified,
}

#[derive(Args, Debug)]
struct MomentArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long = "moment", value_enum, default_value_t = MomentKindArg::Plain)]
    moment: MomentKindArg,
    #[arg(long, value_delimiter = ',', required = true)]
    exponents: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    times: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Monte Carlo trials (moments only).
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

impl MomentArgs {
    fn spec(&self) -> Result<MomentSpec> {
        let kind = match self.moment {
            MomentKindArg::Plain => MomentKind::Plain,
            MomentKindArg::Modified => MomentKind::Modified,
        };
        Ok(MomentSpec::new(kind, self.exponents.clone(), self.times.clone(), self.sizes.clone())?)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    MonteCarlo,
    SimplexQuadrature,
}

#[derive(Args, Debug)]
struct DiagramArgs {
    /// Shipped diagram name, e.g. fig2-left.
    #[arg(long, conflicts_with = "file")]
    name: Option<String>,
    /// Diagram JSON file.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    s: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    t: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::SimplexQuadrature)]
    method: MethodArg,
    /// Monte Carlo sample budget.
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TwMethodArg {
    Painleve,
    Fredholm,
}

#[derive(Args, Debug)]
struct TwArgs {
    /// 1 or 2; both when omitted.
    #[arg(long)]
    beta: Option<u8>,
    /// Fredholm is available for beta = 2 only.
    #[arg(long, value_enum, default_value_t = TwMethodArg::Painleve)]
    method: TwMethodArg,
    #[arg(long, default_value_t = 60)]
    nodes: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Criterion numbers; all when omitted.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(&cli, a),
        Command::Moments(a) => {
            let spec = a.spec()?;
            let est = mc_mixed_moments(&spec, &a.ensemble.spec()?, a.trials, cli.seed.unwrap_or(1))?;
            emit(&cli, "moments.json", &serde_json::to_value(&est)?)
        }
        Command::Oracle(a) => {
            let spec = a.spec()?;
            let ens = a.ensemble.spec()?;
            let value = exact_mixed_moment(&spec, &ens)?;
            emit(&cli, "oracle.json", &json!({ "spec": spec, "ensemble": ens, "value": value }))
        }
        Command::Diagram(a) => diagram(&cli, a),
        Command::Tw(a) => tw(&cli, a),
        Command::Verify(a) => verify(a),
    }
}

/// Prints `value` and, with --out, also writes it to `name` there.
fn emit(cli: &Cli, name: &str, value: &serde_json::Value) -> Result<ExitCode> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), text + "\n")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<ExitCode> {
    if let Some(path) = &cli.config {
        let mut config =
            ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        let dir = cli
            .out
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("results").join(config.experiment.name()));
        let out = run_experiment(&config)?;
        out.write(&dir)?;
        for row in &out.table.rows {
            match row.stderr {
                Some(se) => println!("{} = {} +- {}", row.name, row.value, se),
                None => println!("{} = {}", row.name, row.value),
            }
        }
        eprintln!("wrote {}", dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    let map = ScalingMap::new(a.m)?;
    let lo = map.n_real(a.t_min).ceil().max(3.0) as usize;
    let hi = map.n_real(a.t_max).floor() as usize;
    if hi < lo {
        bail!("the t range [{}, {}] contains no corner size >= 3", a.t_min, a.t_max);
    }
    let mut s = a.s.clone();
    s.sort_by(f64::total_cmp);
    s.dedup();
    let taus: Vec<f64> = s.iter().map(|&x| map.tau(x)).collect();
    let sizes: Vec<usize> = (lo..=hi).collect();
    let path = MatrixPath::new(a.ensemble.spec()?, cli.seed.unwrap_or(1));
    let grid = CornerGrid::compute(&path, &taus, &sizes)?;
    let lines = ScaledLineEnsemble::build(&grid, map, a.j_max)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results/simulate"));
    std::fs::create_dir_all(&dir)?;
    let mut w = create(&dir.join("spectra.csv"))?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("lines.csv"))?;
    lines.write_csv(&mut w)?;
    w.flush()?;
    eprintln!("wrote {} corners x {} times to {}", sizes.len(), taus.len(), dir.display());
    Ok(ExitCode::SUCCESS)
}

fn diagram(cli: &Cli, a: &DiagramArgs) -> Result<ExitCode> {
    let d = match (&a.name, &a.file) {
        (Some(n), None) => builtin_diagram(n).with_context(|| format!("no shipped diagram named {n}"))?,
        (None, Some(f)) => DiagramSpec::load(f).with_context(|| format!("loading {}", f.display()))?,
        _ => bail!("give exactly one of --name or --file"),
    };
    let method = match a.method {
        MethodArg::MonteCarlo => IntegrationMethod::MonteCarlo,
        MethodArg::SimplexQuadrature => IntegrationMethod::SimplexQuadrature,
    };
    let problem = PolytopeProblem::new(&d, &a.alpha, &a.s, &a.t)?;
    let est = problem.integrate(method, a.budget, cli.seed.unwrap_or(1))?;
    emit(
        cli,
        "diagram.json",
        &json!({
            "diagram": d.name,
            "alpha": a.alpha,
            "s": a.s,
            "t": a.t,
            "method": method,
            "dimension": problem.dimension(),
            "value": est.value,
            "error_estimate": est.error_estimate,
            "gram_factor": problem.gram_factor(),
        }),
    )
}

fn tw(cli: &Cli, a: &TwArgs) -> Result<ExitCode> {
    let betas = match a.beta {
        Some(b) => vec![SymmetryClass::from_beta(b)?],
        None => vec![SymmetryClass::Real, SymmetryClass::Complex],
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    for beta in betas {
        let table = match a.method {
            TwMethodArg::Painleve => tw_cdf_painleve(beta, &TwTable::standard_grid())?,
            TwMethodArg::Fredholm if beta == SymmetryClass::Complex => tw_table_fredholm(a.nodes)?,
            TwMethodArg::Fredholm => bail!("the Fredholm route is implemented for beta = 2 only"),
        };
        let suffix = match table.method() {
            TwMethod::Painleve => "",
            TwMethod::Fredholm => "-fredholm",
        };
        let path = dir.join(format!("tw-beta{}{suffix}.csv", beta.beta()));
        let mut w = create(&path)?;
        table.write_csv(&mut w)?;
        w.flush()?;
        for v in table.invariant_violations() {
            eprintln!("note: beta = {}: {v}", beta.beta());
        }
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(a: &VerifyArgs) -> Result<ExitCode> {
    let constants = AcceptanceConstants::shipped();
    let ids: Vec<u8> = if a.criteria.is_empty() {
        CRITERIA.to_vec()
    } else {
        a.criteria.clone()
    };
    let mut all = true;
    for id in ids {
        let r = run_criterion(id, &constants)?;
        println!("{r}");
        all &= r.passed;
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
