//! Command-line front end.
//!
//! Every subcommand accepts `--config <file>` (JSON, or TOML when the file
//! name ends in `.toml`) whose keys mirror the long flag names with
//! underscores; flags given on the command line take precedence. Exit
//! status is 0 on success, 2 for validation errors, 3 when a resource guard
//! or numerical check trips, and 4 for I/O errors. Failures print one JSON
//! line `{"error": <kind>, "message": <text>}` on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analysis::{mi_matrix, run_simulation_with, run_sweep, SimulationOptions, SweepConfig};
use crate::distribution::{boltzmann_objective, product_distribution, univariate_marginals, DistributionTable};
use crate::error::{Error, Result};
use crate::export::{self, write_atomic, OutputFormat};
use crate::landscape::NmLandscape;
use crate::mop::{full_table, make_bi_objective, MnmProblem};
use crate::pareto::{pareto_front, FrontResult};
use crate::table::Matrix;

#[derive(Debug, Parser)]
#[command(name = "mnm", version, about = "Multi-objective NM-landscapes, Boltzmann distributions and Pareto fronts")]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an NM-landscape and write it as JSON.
    Generate(GenerateArgs),
    /// Run the full pipeline on a bi-objective problem.
    Simulate(SimulateArgs),
    /// Sweep maximum order and sigma, recording mutual information.
    Sweep(SweepArgs),
    /// Extract a Pareto front.
    Front(FrontArgs),
    /// Pairwise mutual information of a distribution.
    Mi(MiArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelArg {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontSource {
    /// Objective values.
    Objectives,
    /// Boltzmann probabilities of each objective.
    Boltzmann,
    /// Univariate product approximations of the Boltzmann tables.
    Product,
}

/// Fills every `None` field of `self` from `other`.
trait Overlay {
    fn overlay(&mut self, other: Self);
}

macro_rules! overlay_fields {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl Overlay for $ty {
            fn overlay(&mut self, other: Self) {
                $(if self.$field.is_none() { self.$field = other.$field; })*
            }
        }
    };
}

/// Parameters shared by commands that build a bi-objective problem.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemArgs {
    /// Number of variables N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Maximum order of both objectives (shorthand for --m1 M --m2 M).
    #[arg(long)]
    pub m: Option<usize>,
    /// Maximum order of objective 1.
    #[arg(long)]
    pub m1: Option<usize>,
    /// Maximum order of objective 2.
    #[arg(long)]
    pub m2: Option<usize>,
    /// Standard deviation of the coefficient Gaussian.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parent landscape JSON to truncate instead of generating one.
    #[arg(long)]
    pub landscape: Option<PathBuf>,
    /// Boltzmann temperature.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Use raw objective values instead of normalized ones.
    #[arg(long)]
    pub raw: Option<bool>,
}

overlay_fields!(ProblemArgs { n, m, m1, m2, sigma, seed, landscape, temperature, raw });

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

overlay_fields!(GenerateArgs { n, m, sigma, seed, out });

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Figure preset: 1 (needs --row) or 2 (needs --panel).
    #[arg(long)]
    pub figure: Option<u8>,
    /// Row of the figure-1 preset, 1 to 4.
    #[arg(long)]
    pub row: Option<u8>,
    #[arg(long, value_enum)]
    pub panel: Option<PanelArg>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Overlay for SimulateArgs {
    fn overlay(&mut self, other: Self) {
        self.problem.overlay(other.problem);
        self.figure = self.figure.or(other.figure);
        self.row = self.row.or(other.row);
        self.panel = self.panel.or(other.panel);
        self.out = self.out.take().or(other.out);
        self.format = self.format.or(other.format);
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Maximum orders, e.g. `1-9` or `1,2,5`.
    #[arg(long)]
    pub m_grid: Option<String>,
    /// Single maximum order (overrides --m-grid).
    #[arg(long)]
    pub m: Option<usize>,
    /// Sigma values, e.g. `1,3,5`.
    #[arg(long)]
    pub sigma_grid: Option<String>,
    /// Models per (M, sigma) cell.
    #[arg(long)]
    pub models: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Objective (1 or 2) whose dependencies are measured.
    #[arg(long)]
    pub objective: Option<usize>,
    /// Grid width for counting distinct objective vectors.
    #[arg(long)]
    pub distinct_resolution: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

overlay_fields!(SweepArgs {
    n, m_grid, m, sigma_grid, models, base_seed, temperature, objective, distinct_resolution, out
});

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontArgs {
    /// CSV table `solution_index,f1,...,fm` to read instead of building a problem.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum)]
    pub source: Option<FrontSource>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Overlay for FrontArgs {
    fn overlay(&mut self, other: Self) {
        self.table = self.table.take().or(other.table);
        self.problem.overlay(other.problem);
        self.source = self.source.or(other.source);
        self.out = self.out.take().or(other.out);
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiArgs {
    /// CSV distribution `solution_index,p` to read instead of building a problem.
    #[arg(long)]
    pub distribution: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Objective (1-based) whose Boltzmann distribution is analyzed.
    #[arg(long)]
    pub objective: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Overlay for MiArgs {
    fn overlay(&mut self, other: Self) {
        self.distribution = self.distribution.take().or(other.distribution);
        self.problem.overlay(other.problem);
        self.objective = self.objective.or(other.objective);
        self.out = self.out.take().or(other.out);
    }
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(display.clone(), e))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| Error::Format {
        path: display,
        message,
    })
}

fn with_config<T>(mut args: T, config: Option<PathBuf>) -> Result<T>
where
    T: Overlay + for<'de> Deserialize<'de>,
{
    if let Some(path) = config {
        args.overlay(load_config(&path)?);
    }
    Ok(args)
}

/// Default experiment parameters: N = 10, T = 1.
pub const DEFAULT_N: usize = 10;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

/// `(sigma, m1, m2)` for each figure preset.
pub fn preset(figure: u8, row: Option<u8>, panel: Option<PanelArg>) -> Result<(f64, usize, usize)> {
    match (figure, row, panel) {
        (1, Some(1), None) => Ok((1.0, 1, 1)),
        (1, Some(2), None) => Ok((19.0, 1, 1)),
        (1, Some(3), None) => Ok((1.0, 2, 2)),
        (1, Some(4), None) => Ok((19.0, 2, 2)),
        (2, None, Some(PanelArg::Left)) => Ok((36.0, 1, 2)),
        (2, None, Some(PanelArg::Right)) => Ok((36.0, 2, 3)),
        _ => Err(Error::param(
            "presets are --figure 1 --row 1..4 or --figure 2 --panel left|right",
        )),
    }
}

/// Bi-objective problem plus the options used to analyze it.
struct ResolvedProblem {
    problem: MnmProblem,
    options: SimulationOptions,
}

fn resolve_problem(p: &ProblemArgs, preset_values: Option<(f64, usize, usize)>) -> Result<ResolvedProblem> {
    let (preset_sigma, preset_m1, preset_m2) = match preset_values {
        Some((s, a, b)) => (Some(s), Some(a), Some(b)),
        None => (None, None, None),
    };
    let m1 = p.m1.or(p.m).or(preset_m1).unwrap_or(1);
    let m2 = p.m2.or(p.m).or(preset_m2).unwrap_or(m1.max(1));
    let parent = match &p.landscape {
        Some(path) => NmLandscape::read(path)?,
        None => {
            let n = p.n.unwrap_or(DEFAULT_N);
            let sigma = p.sigma.or(preset_sigma).unwrap_or(1.0);
            if m2 > n {
                return Err(Error::param(format!("maximum order {m2} exceeds n = {n}")));
            }
            NmLandscape::generate(n, m2, sigma, p.seed.unwrap_or(DEFAULT_SEED))?
        }
    };
    let problem = make_bi_objective(&parent, m1, m2)?;
    let temperature = p.temperature.unwrap_or(DEFAULT_TEMPERATURE);
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::param(format!("temperature must be positive, got {temperature}")));
    }
    Ok(ResolvedProblem {
        problem,
        options: SimulationOptions {
            temperature,
            normalize: !p.raw.unwrap_or(false),
        },
    })
}

/// Parses `1-9`, `1..9`, `1..=9` or comma lists such as `1,2,5`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part
            .split_once("..=")
            .or_else(|| part.split_once(".."))
            .or_else(|| part.split_once('-'));
        let bad = || Error::param(format!("cannot parse {part:?} as an integer or range"));
        match range {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(Error::param("empty list"));
    }
    Ok(out)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| Error::param(format!("cannot parse {p:?} as a number"))))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::param("empty list"));
    }
    Ok(out)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

pub fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config)?;
    let n = args.n.unwrap_or(DEFAULT_N);
    let m = args.m.unwrap_or(2);
    let landscape = NmLandscape::generate(n, m, args.sigma.unwrap_or(1.0), args.seed.unwrap_or(DEFAULT_SEED))?;
    emit(args.out.as_deref(), &landscape.to_json())
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config)?;
    let preset_values = match args.figure {
        Some(f) => Some(preset(f, args.row, args.panel)?),
        None if args.row.is_some() || args.panel.is_some() => {
            return Err(Error::param("--row and --panel require --figure"));
        }
        None => None,
    };
    let resolved = resolve_problem(&args.problem, preset_values)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("simulation"));
    let fmt: OutputFormat = args.format.map(Into::into).unwrap_or_default();
    let ext = fmt.extension();
    let sim = run_simulation_with(&resolved.problem, resolved.options)?;
    let problem = &resolved.problem;

    let parent = &problem.objectives()[problem.n_objectives() - 1].landscape;
    write_atomic(&out.join("landscape.json"), parent.to_json().as_bytes())?;
    let meta = export::problem_metadata(problem, &sim.table, Some(resolved.options.temperature));
    write_atomic(
        &out.join(format!("objectives.{ext}")),
        export::objective_table(&sim.table, fmt, Some(&meta)).as_bytes(),
    )?;
    for (k, obj) in sim.objectives.iter().enumerate() {
        let k = k + 1;
        write_atomic(&out.join(format!("boltzmann_f{k}.{ext}")), export::distribution(&obj.boltzmann, fmt).as_bytes())?;
        write_atomic(&out.join(format!("marginals_f{k}.{ext}")), export::marginals(&obj.marginals, fmt).as_bytes())?;
        write_atomic(&out.join(format!("product_f{k}.{ext}")), export::distribution(&obj.product, fmt).as_bytes())?;
    }
    write_atomic(&out.join(format!("front_objectives.{ext}")), export::front(&sim.true_front, fmt).as_bytes())?;
    write_atomic(&out.join(format!("front_boltzmann.{ext}")), export::front(&sim.boltzmann_front, fmt).as_bytes())?;
    write_atomic(&out.join(format!("front_factorized.{ext}")), export::front(&sim.factorized_front, fmt).as_bytes())?;
    write_atomic(&out.join("front_comparison.json"), export::comparison_json(&sim.comparison).as_bytes())?;
    write_atomic(&out.join("summary.json"), export::simulation_summary(&sim, &meta).as_bytes())?;
    Ok(())
}

pub fn sweep_config(args: &SweepArgs) -> Result<SweepConfig> {
    let mut config = SweepConfig::default();
    if let Some(n) = args.n {
        config.n_vars = n;
    }
    if let Some(g) = &args.m_grid {
        config.m_grid = parse_usize_list(g)?;
    }
    if let Some(m) = args.m {
        config.m_grid = vec![m];
    }
    if let Some(g) = &args.sigma_grid {
        config.sigma_grid = parse_f64_list(g)?;
    }
    if let Some(k) = args.models {
        config.models_per_cell = k;
    }
    if let Some(s) = args.base_seed {
        config.base_seed = s;
    }
    if let Some(t) = args.temperature {
        config.temperature = t;
    }
    if let Some(o) = args.objective {
        config.objective = o;
    }
    if let Some(r) = args.distinct_resolution {
        config.distinct_resolution = r;
    }
    config.validate()?;
    Ok(config)
}

pub fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg_path = args.config.clone();
    let args = with_config(args, cfg_path)?;
    let config = sweep_config(&args)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("sweep"));
    let result = run_sweep(&config)?;
    write_atomic(&out.join("sweep_models.csv"), export::sweep_models_csv(&result).as_bytes())?;
    write_atomic(&out.join("sweep_cells.csv"), export::sweep_cells_csv(&result).as_bytes())?;
    write_atomic(&out.join("sweep_plot.json"), export::sweep_plot_json(&result).as_bytes())?;
    Ok(())
}

fn problem_front(p: &ProblemArgs, source: FrontSource) -> Result<FrontResult> {
    let resolved = resolve_problem(p, None)?;
    let table = full_table(&resolved.problem, resolved.options.normalize)?;
    if source == FrontSource::Objectives {
        return pareto_front(table.values());
    }
    let mut dists: Vec<DistributionTable> = Vec::new();
    for c in 0..table.values().cols() {
        let b = boltzmann_objective(&table, c, resolved.options.temperature)?;
        dists.push(match source {
            FrontSource::Product => product_distribution(&univariate_marginals(&b)),
            _ => b,
        });
    }
    crate::pareto::front_from_distributions(&dists)
}

pub fn cmd_front(args: FrontArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config)?;
    let source = args.source.unwrap_or(FrontSource::Objectives);
    let front = match &args.table {
        Some(path) => {
            if args.source.is_some_and(|s| s != FrontSource::Objectives) {
                return Err(Error::param("--source applies only to generated problems"));
            }
            let (_, rows) = export::read_indexed_csv(path)?;
            pareto_front(&Matrix::from_rows(&rows)?)?
        }
        None => problem_front(&args.problem, source)?,
    };
    emit(args.out.as_deref(), &front.to_csv())
}

pub fn cmd_mi(args: MiArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config)?;
    let dist = match &args.distribution {
        Some(path) => {
            let (header, rows) = export::read_indexed_csv(path)?;
            if header.len() != 2 {
                return Err(Error::Format {
                    path: path.display().to_string(),
                    message: "expected columns solution_index,p".into(),
                });
            }
            DistributionTable::from_probs(rows.into_iter().map(|r| r[0]).collect())?
        }
        None => {
            let resolved = resolve_problem(&args.problem, None)?;
            let objective = args.objective.unwrap_or(2);
            if objective < 1 || objective > resolved.problem.n_objectives() {
                return Err(Error::param(format!("objective must be 1 or 2, got {objective}")));
            }
            let table = full_table(&resolved.problem, resolved.options.normalize)?;
            boltzmann_objective(&table, objective - 1, resolved.options.temperature)?
        }
    };
    emit(args.out.as_deref(), &mi_matrix(&dist)?.to_csv())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(Error::param("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Front(a) => cmd_front(a),
        Command::Mi(a) => cmd_mi(a),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            e.exit_code()
        }
    }
}
