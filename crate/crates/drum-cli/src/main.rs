use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use drum::checks::{check_d_monotonicity, check_sarpd, check_stability, cone_membership, CheckReport};
use drum::counterfactual::{bound_functional, CounterfactualProblem};
use drum::geometry::{Budget, DemandGeometry};
use drum::inference::{run_test, stream_rng, TestConfig, Weighting};
use drum::io;
use drum::model::{estimate_rho, ChoiceUniverse, StochasticChoiceFunction};
use drum::repr::{catalog_h, convert_v_to_h, Catalog, DrumModel};
use drum::sim::{run_experiment, simulate, BinaryDgp, Dgp, DgpKind, ExperimentConfig};

/// Test panel stochastic choice data against the dynamic random utility model.
#[derive(Parser, Debug)]
#[command(name = "drum", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Numerical tolerance for deterministic checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output directory for written artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file with defaults for any option.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write type matrices and inequality matrices.
    Matrices(MatricesArgs),
    /// Deterministic consistency checks on a population choice function.
    Check(CheckArgs),
    /// Bootstrap cone-projection test on panel data.
    Test(TestArgs),
    /// Bounds on a functional of next-period demand.
    Bounds(BoundsArgs),
    /// Draw a panel from a data generating process.
    Simulate(SimulateArgs),
    /// Monte Carlo rejection rates of the test.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Choice universe as JSON.
    #[arg(long)]
    universe: Option<PathBuf>,
    /// Budgets CSV; the universe is built from budget patches.
    #[arg(long)]
    budgets: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Mtx,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CatalogArg {
    Binary3,
    Binary4,
    Simple,
    Demand3x3,
}

#[derive(Args, Debug)]
struct MatricesArgs {
    #[command(flatten)]
    source: Source,
    /// Lottery table restricting types to expected-utility orders.
    #[arg(long)]
    eu: Option<PathBuf>,
    /// Also write an inequality matrix from the built-in catalog.
    #[arg(long, value_enum)]
    catalog: Option<CatalogArg>,
    /// Convert each static type matrix to inequalities.
    #[arg(long)]
    facets: bool,
    #[arg(long, value_enum, default_value = "mtx")]
    format: Format,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[command(flatten)]
    source: Source,
    /// Choice function CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Panel CSV.
    #[arg(long)]
    panel: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also test for preferences that stay fixed over time (budget data only).
    #[arg(long)]
    sarpd: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum WeightingArg {
    Identity,
    InverseVariance,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Identity => Weighting::Identity,
            WeightingArg::InverseVariance => Weighting::InverseVariance,
        }
    }
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Lotteries CSV; test against expected-utility types
    #[arg(long)]
    eu: Option<PathBuf>,
    /// Significance level [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap replications [default: 999]
    #[arg(long)]
    reps: Option<usize>,
    /// Tightening parameter [default: sqrt(log n / n)]
    #[arg(long)]
    tau: Option<f64>,
    /// Weighting of the test statistic [default: identity]
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Observed choice function CSV.
    #[arg(long)]
    input: PathBuf,
    /// Budgets of the observed periods.
    #[arg(long)]
    budgets: PathBuf,
    /// Prices of a next-period budget at unit expenditure, comma separated; repeat per budget.
    #[arg(long = "new-budget", required = true)]
    new_budget: Vec<String>,
    /// Next-period budget carrying the functional (1-based).
    #[arg(long, default_value_t = 1)]
    target: usize,
    /// Functional CSV `patch,lower,upper`.
    #[arg(long)]
    g: PathBuf,
    /// Condition on an observed path, `menus:choices` with `|`-joined 1-based entries.
    #[arg(long)]
    condition: Option<String>,
    /// Project the data onto the model cone first.
    #[arg(long)]
    project: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum DgpArg {
    Dgp1,
    Dgp2,
    Binary1,
    Binary2,
    Binary3,
}

impl DgpArg {
    fn build(self, horizon: usize) -> drum::Result<Dgp> {
        match self {
            DgpArg::Dgp1 => Dgp::demand(DgpKind::CobbDouglasWalk { sd: 5.0 }, horizon),
            DgpArg::Dgp2 => Dgp::demand(DgpKind::CobbDouglasCopula { correlation: 0.5 }, horizon),
            DgpArg::Binary1 => Dgp::binary(BinaryDgp::Rho1),
            DgpArg::Binary2 => Dgp::binary(BinaryDgp::Rho2),
            DgpArg::Binary3 => Dgp::binary(BinaryDgp::Rho3),
        }
    }

    fn name(self) -> &'static str {
        match self {
            DgpArg::Dgp1 => "dgp1",
            DgpArg::Dgp2 => "dgp2",
            DgpArg::Binary1 => "binary1",
            DgpArg::Binary2 => "binary2",
            DgpArg::Binary3 => "binary3",
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Data generating process
    #[arg(long, value_enum)]
    dgp: DgpArg,
    /// Agents per choice path (demand designs) or per menu path (binary designs).
    #[arg(long)]
    n: usize,
    /// Periods of the demand designs.
    #[arg(long, default_value_t = 2)]
    horizon: usize,
    /// Also write the exact population choice function.
    #[arg(long)]
    population: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Designs to run, comma separated
    #[arg(long, value_enum, value_delimiter = ',')]
    dgps: Vec<DgpArg>,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Simulated data sets per cell [default: 300]
    #[arg(long)]
    sims: Option<usize>,
    /// Bootstrap replications per test [default: 199]
    #[arg(long)]
    reps: Option<usize>,
    /// Significance level [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,
    /// Weighting of the test statistic [default: identity]
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
}

/// Defaults read from `--config`; command-line values win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    tolerance: Option<f64>,
    out: Option<PathBuf>,
    alpha: Option<f64>,
    reps: Option<usize>,
    tau: Option<f64>,
    weighting: Option<WeightingArg>,
    sims: Option<usize>,
    sizes: Option<Vec<usize>>,
    dgps: Option<Vec<DgpArg>>,
}

struct Settings {
    seed: u64,
    tolerance: f64,
    out: Option<PathBuf>,
    file: FileConfig,
}

impl Settings {
    fn write(&self, name: &str, contents: &str) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.out else { return Ok(None) };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(Some(path))
    }
}

enum Outcome {
    Completed,
    Rejected,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Completed) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {:#}", e);
            match e.downcast_ref::<drum::DrumError>() {
                Some(drum::DrumError::ModelRejected(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let file: FileConfig = match &cli.global.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    if let Some(k) = cli.global.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring threads")?;
    }
    let settings = Settings {
        seed: cli.global.seed.or(file.seed).unwrap_or(0),
        tolerance: cli.global.tolerance.or(file.tolerance).unwrap_or(drum::checks::DEFAULT_TOL),
        out: cli.global.out.clone().or(file.out.clone()),
        file,
    };
    match cli.command {
        Command::Matrices(a) => matrices(a, &settings),
        Command::Check(a) => check(a, &settings),
        Command::Test(a) => test(a, &settings),
        Command::Bounds(a) => bounds(a, &settings),
        Command::Simulate(a) => simulate_cmd(a, &settings),
        Command::Experiment(a) => experiment(a, &settings),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_budgets(path: &Path) -> Result<Vec<Budget>> {
    io::read_budgets(read(path)?.as_bytes()).with_context(|| format!("parsing {}", path.display()))
}

/// Universe and, for budget data, the geometry.
fn load_source(source: &Source) -> Result<(ChoiceUniverse, Option<DemandGeometry>)> {
    match (&source.universe, &source.budgets) {
        (Some(u), None) => Ok((io::read_universe(&read(u)?)?, None)),
        (None, Some(b)) => {
            let geometry = DemandGeometry::from_budgets(&load_budgets(b)?)?;
            Ok((geometry.universe()?, Some(geometry)))
        }
        (Some(_), Some(_)) => bail!("give either --universe or --budgets, not both"),
        (None, None) => bail!("one of --universe or --budgets is required"),
    }
}

fn load_model(universe: ChoiceUniverse, geometry: Option<DemandGeometry>, eu: Option<&Path>) -> Result<DrumModel> {
    Ok(match (geometry, eu) {
        (Some(_), Some(_)) => bail!("expected-utility types apply to discrete universes, not budgets"),
        (Some(g), None) => DrumModel::demand(g)?,
        (None, Some(path)) => DrumModel::expected_utility(universe, &io::read_lotteries(read(path)?.as_bytes())?)?,
        (None, None) => DrumModel::random_utility(universe)?,
    })
}

fn load_data(data: &DataArgs, universe: &ChoiceUniverse) -> Result<StochasticChoiceFunction> {
    match (&data.input, &data.panel) {
        (Some(p), None) => Ok(io::read_rho(read(p)?.as_bytes(), universe.menu_sizes())?),
        (None, Some(p)) => Ok(estimate_rho(&io::read_panel(read(p)?.as_bytes())?, universe)?),
        (Some(_), Some(_)) => bail!("give either --input or --panel, not both"),
        (None, None) => bail!("one of --input or --panel is required"),
    }
}

fn matrices(args: MatricesArgs, s: &Settings) -> Result<Outcome> {
    let (universe, geometry) = load_source(&args.source)?;
    let model = load_model(universe, geometry.clone(), args.eu.as_deref())?;
    let ext = match args.format {
        Format::Mtx => "mtx",
        Format::Csv => "csv",
    };
    let a_text = |a: &drum::repr::TypeMatrix| match args.format {
        Format::Mtx => io::type_matrix_market(a),
        Format::Csv => io::type_matrix_csv(a),
    };
    let h_text = |h: &drum::repr::InequalityMatrix| match args.format {
        Format::Mtx => io::inequality_matrix_market(h),
        Format::Csv => io::inequality_matrix_csv(h),
    };
    let mut written = Vec::new();
    for (t, a) in model.statics().iter().enumerate() {
        println!("period {}: static type matrix {} x {}", t + 1, a.nrows(), a.ncols());
        written.extend(s.write(&format!("A_t{}.{}", t + 1, ext), &a_text(a))?);
        if args.facets {
            let h = convert_v_to_h(&a.to_qmatrix(), false)?;
            println!("period {}: {} inequality rows", t + 1, h.nrows());
            written.extend(s.write(&format!("H_t{}.{}", t + 1, ext), &h_text(&h))?);
        }
    }
    let space = model.full_space()?;
    let dynamic = model.dynamic(&space)?;
    println!("dynamic type matrix {} x {}", dynamic.nrows(), dynamic.ncols());
    written.extend(s.write(&format!("A_dynamic.{}", ext), &a_text(&dynamic))?);
    if let Some(c) = args.catalog {
        let cat = match c {
            CatalogArg::Binary3 => Catalog::Binary(3),
            CatalogArg::Binary4 => Catalog::Binary(4),
            CatalogArg::Simple => Catalog::Simple,
            CatalogArg::Demand3x3 => Catalog::Demand3x3,
        };
        let h = catalog_h(cat)?;
        println!("catalog inequality matrix {} x {}", h.nrows(), h.ncols());
        written.extend(s.write(&format!("H_catalog.{}", ext), &h_text(&h))?);
    }
    if let Some(g) = &geometry {
        written.extend(s.write("patches.json", &io::patches_json(g)?)?);
    }
    if written.is_empty() {
        print!("{}", a_text(&dynamic));
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(Outcome::Completed)
}

fn check(args: CheckArgs, s: &Settings) -> Result<Outcome> {
    let (universe, geometry) = load_source(&args.data.source)?;
    let rho = load_data(&args.data, &universe)?;
    let model = load_model(universe.clone(), geometry.clone(), None)?;
    let a = model.dynamic(rho.space())?;
    let mut reports: Vec<CheckReport> = vec![
        check_stability(&rho, s.tolerance),
        check_d_monotonicity(&rho, &universe, s.tolerance),
        cone_membership(&rho, &a)?.report,
    ];
    if args.sarpd {
        let g = geometry.as_ref().ok_or_else(|| anyhow!("--sarpd needs --budgets"))?;
        reports.push(check_sarpd(&rho, g, s.tolerance)?);
    }
    for r in &reports {
        println!("{}", r);
    }
    if let Some(p) = s.write("check.json", &serde_json::to_string_pretty(&reports)?)? {
        println!("wrote {}", p.display());
    }
    Ok(if reports.iter().all(|r| r.passed) { Outcome::Completed } else { Outcome::Rejected })
}

fn test(args: TestArgs, s: &Settings) -> Result<Outcome> {
    let (universe, geometry) = load_source(&args.data.source)?;
    let rho = load_data(&args.data, &universe)?;
    let model = load_model(universe, geometry, args.eu.as_deref())?;
    let alpha = args.alpha.or(s.file.alpha).unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("alpha {} outside (0, 1)", alpha);
    }
    let config = TestConfig {
        bootstrap_reps: args.reps.or(s.file.reps).unwrap_or(999),
        tau: args.tau.or(s.file.tau),
        seed: s.seed,
        weighting: args.weighting.or(s.file.weighting).unwrap_or(WeightingArg::Identity).into(),
        threads: None,
    };
    let a = model.dynamic(rho.space())?;
    let report = run_test(&rho, &a, &config)?;
    let rejected = report.p_value <= alpha;
    println!(
        "J = {:.6}  p = {:.4}  tau = {:.4}  n = {}  reps = {}  {}",
        report.statistic,
        report.p_value,
        report.tau,
        report.sample_size,
        report.bootstrap_reps,
        if rejected { "REJECT" } else { "do not reject" }
    );
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "alpha": alpha,
        "rejected": rejected,
        "critical_value": critical_value(&report.bootstrap, alpha),
        "report": report,
    }))?;
    if let Some(p) = &args.report {
        fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
    }
    s.write("test.json", &json)?;
    Ok(if rejected { Outcome::Rejected } else { Outcome::Completed })
}

fn critical_value(boot: &[f64], alpha: f64) -> f64 {
    let mut v = boot.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((1.0 - alpha) * (v.len() as f64 + 1.0)).ceil() as usize;
    v[k.clamp(1, v.len()) - 1]
}

fn parse_path_pair(text: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let (m, c) = text.split_once(':').ok_or_else(|| anyhow!("condition must be menus:choices"))?;
    let parse = |s: &str| -> Result<Vec<usize>> {
        s.split('|')
            .map(|x| match x.trim().parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(anyhow!("bad path entry {:?}", x)),
            })
            .collect()
    };
    Ok((parse(m)?, parse(c)?))
}

fn bounds(args: BoundsArgs, s: &Settings) -> Result<Outcome> {
    let geometry = DemandGeometry::from_budgets(&load_budgets(&args.budgets)?)?;
    let universe = geometry.universe()?;
    let rho = io::read_rho(read(&args.input)?.as_bytes(), universe.menu_sizes())?;
    let new_budgets = args
        .new_budget
        .iter()
        .enumerate()
        .map(|(k, text)| {
            let prices = text
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| anyhow!("bad price {:?}", p)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Budget::new(geometry.horizon(), k, prices, 1.0)?)
        })
        .collect::<Result<Vec<_>>>()?;
    if args.target == 0 {
        bail!("target budgets are numbered from 1");
    }
    let (g_lower, g_upper) = io::read_functional(read(&args.g)?.as_bytes())?;
    let problem = CounterfactualProblem {
        rho,
        geometry,
        new_budgets,
        target: args.target - 1,
        g_lower,
        g_upper,
        condition: args.condition.as_deref().map(parse_path_pair).transpose()?,
        project: args.project,
    };
    let report = bound_functional(&problem)?;
    println!("bounds [{:.6}, {:.6}] ({:?})", report.lower, report.upper, report.method);
    for w in &report.warnings {
        println!("warning: {}", w);
    }
    if let Some(p) = s.write("bounds.json", &serde_json::to_string_pretty(&report)?)? {
        println!("wrote {}", p.display());
    }
    Ok(Outcome::Completed)
}

fn simulate_cmd(args: SimulateArgs, s: &Settings) -> Result<Outcome> {
    let dgp = args.dgp.build(args.horizon)?;
    let mut rng = stream_rng(s.seed, 0);
    let panel = simulate(&dgp, dgp.assignment(args.n), &mut rng);
    let text = io::write_panel(&panel)?;
    let mut written = Vec::new();
    written.extend(s.write("panel.csv", &text)?);
    written.extend(s.write("universe.json", &dgp.universe().to_json()?)?);
    let rho = estimate_rho(&panel, dgp.universe())?;
    written.extend(s.write("rho.csv", &io::write_rho(&rho))?);
    if args.population {
        written.extend(s.write("population.csv", &io::write_rho(&dgp.population()?))?);
    }
    if let Some(g) = dgp.model().geometry() {
        let budgets: Vec<Budget> = g
            .periods
            .iter()
            .enumerate()
            .flat_map(|(t, a)| a.budgets.iter().map(move |b| Budget { period: t, ..b.clone() }))
            .collect();
        written.extend(s.write("budgets.csv", &io::write_budgets(&budgets))?);
    }
    if written.is_empty() {
        print!("{}", text);
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(Outcome::Completed)
}

fn experiment(args: ExperimentArgs, s: &Settings) -> Result<Outcome> {
    let dgps = if args.dgps.is_empty() { s.file.dgps.clone().unwrap_or_default() } else { args.dgps };
    let sizes = if args.sizes.is_empty() { s.file.sizes.clone().unwrap_or_default() } else { args.sizes };
    if dgps.is_empty() || sizes.is_empty() {
        bail!("--dgps and --sizes are required");
    }
    let config = ExperimentConfig {
        dgps: dgps.iter().map(|d| Ok((d.name().to_string(), d.build(2)?))).collect::<drum::Result<_>>()?,
        sizes,
        sims: args.sims.or(s.file.sims).unwrap_or(300),
        reps: args.reps.or(s.file.reps).unwrap_or(199),
        alpha: args.alpha.or(s.file.alpha).unwrap_or(0.05),
        seed: s.seed,
        weighting: args.weighting.or(s.file.weighting).unwrap_or(WeightingArg::Identity).into(),
    };
    let report = run_experiment(&config)?;
    print!("{}", report.to_table());
    for (name, text) in [
        ("experiment.csv", report.to_csv()),
        ("experiment.txt", report.to_table()),
        ("experiment.svg", report.to_svg()),
        ("experiment.json", serde_json::to_string_pretty(&report)?),
    ] {
        if let Some(p) = s.write(name, &text)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(Outcome::Completed)
}
