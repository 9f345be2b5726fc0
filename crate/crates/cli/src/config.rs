//! Command-line and config-file parsing into a validated [`RunConfig`].
//!
//! Every option may also be given in a TOML file passed with `--config`;
//! keys are the long flag names (`n-grid`, `gamma-policy`, ...). Flags on
//! the command line take precedence over the file.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use frontier_core::estimator::{plan_sequences, EstimatorParams, ExponentPlan};
use frontier_core::experiments::{CltConfig, GammaPolicy, GapRateConfig, SandwichConfig};
use frontier_core::{Frontier, Kernel};
use serde::Deserialize;

/// Seed used when none is given. Environment variables are never consulted.
pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_REPLICATES: usize = 500;
pub const DEFAULT_X: f64 = 0.5;
pub const DEFAULT_GAMMA: f64 = 0.05;
pub const DEFAULT_SANDWICH_N: usize = 10_000;
pub const DEFAULT_N_GRID: [usize; 3] = [10_000, 100_000, 1_000_000];

#[derive(Debug, Parser)]
#[command(
    name = "frontier",
    version,
    about = "Kernel estimation of sample boundaries from strip maxima, with Monte Carlo checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Draw a sample and evaluate the boundary estimate at one or more points.
    Estimate(Options),
    /// Distribution of standardized errors against the normal limit.
    Clt(Options),
    /// Coupled Poisson processes: ordering of estimators and bracketing frequency.
    Sandwich(Options),
    /// Mean strip-maximum gap between the coupled processes along an n grid.
    GapRate(Options),
    /// Deterministic sum of estimator weights along an n grid.
    WeightSum(Options),
    /// Check the rate conditions for k = n^a, h = n^-b.
    Plan(Options),
    /// Draw a point set on the region under the frontier.
    Sample(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaPolicyArg {
    Fixed,
    /// gamma = k^(-1/2)
    InvSqrtK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    /// Fixed-size i.i.d. sample.
    Uniform,
    /// Homogeneous Poisson process with mean count n.
    Poisson,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Options {
    /// TOML file with default values for any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Frontier as family:params, e.g. constant:1, affine:0.5,1, cosine:1,0.3,
    /// piecewise-linear:1,1.5,0.8 (append @alpha to declare a Hölder exponent).
    #[arg(long)]
    pub frontier: Option<String>,
    /// epanechnikov | biweight | triangular
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Strip exponent: k = round(n^a).
    #[arg(long)]
    pub a: Option<f64>,
    /// Bandwidth exponent: h = n^-b.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(default, deserialize_with = "loose_string")]
    pub n: Option<String>,
    /// Comma-separated, strictly increasing, e.g. 1e4,1e5,1e6.
    #[arg(long)]
    #[serde(default, deserialize_with = "loose_string")]
    pub n_grid: Option<String>,
    /// Number of strips (overrides the plan).
    #[arg(long)]
    pub k: Option<usize>,
    /// Bandwidth (overrides the plan).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Fixed coupling width gamma in (0, 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub gamma_policy: Option<GammaPolicyArg>,
    /// Evaluation point(s); comma-separated for `estimate`.
    #[arg(long)]
    #[serde(default, deserialize_with = "loose_string")]
    pub x: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub process: Option<Process>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; defaults to <command>.<format> in the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for replicates (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Config-file values that may be written as numbers, strings or arrays.
#[derive(Deserialize)]
#[serde(untagged)]
enum Loose {
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<Loose>),
}

impl Loose {
    fn render(self) -> String {
        match self {
            Loose::Int(v) => v.to_string(),
            Loose::Float(v) => v.to_string(),
            Loose::Text(s) => s,
            Loose::List(items) => items.into_iter().map(Loose::render).collect::<Vec<_>>().join(","),
        }
    }
}

fn loose_string<'de, D>(de: D) -> Result<Option<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Ok(Option::<Loose>::deserialize(de)?.map(Loose::render))
}

impl Options {
    /// Fills every unset field from `file`.
    fn merge(self, file: Options) -> Options {
        Options {
            config: self.config,
            frontier: self.frontier.or(file.frontier),
            kernel: self.kernel.or(file.kernel),
            alpha: self.alpha.or(file.alpha),
            a: self.a.or(file.a),
            b: self.b.or(file.b),
            n: self.n.or(file.n),
            n_grid: self.n_grid.or(file.n_grid),
            k: self.k.or(file.k),
            h: self.h.or(file.h),
            replicates: self.replicates.or(file.replicates),
            gamma: self.gamma.or(file.gamma),
            gamma_policy: self.gamma_policy.or(file.gamma_policy),
            x: self.x.or(file.x),
            seed: self.seed.or(file.seed),
            process: self.process.or(file.process),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
            threads: self.threads.or(file.threads),
        }
    }
}

/// Rejected command line or config file. Maps to exit status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Clt,
    Sandwich,
    GapRate,
    WeightSum,
    Plan,
    Sample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Clt => "clt",
            Command::Sandwich => "sandwich",
            Command::GapRate => "gap-rate",
            Command::WeightSum => "weight-sum",
            Command::Plan => "plan",
            Command::Sample => "sample",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimateJob {
    pub frontier: Frontier,
    pub params: EstimatorParams,
    pub xs: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct WeightSumJob {
    pub kernel: Kernel,
    pub plan: ExponentPlan,
    pub n_grid: Vec<usize>,
    pub x: f64,
}

#[derive(Debug, Clone)]
pub struct SampleJob {
    pub frontier: Frontier,
    pub n: usize,
    pub seed: u64,
    pub process: Process,
}

#[derive(Debug, Clone)]
pub enum Job {
    Estimate(EstimateJob),
    Clt(CltConfig),
    Sandwich(SandwichConfig),
    GapRate(GapRateConfig),
    WeightSum(WeightSumJob),
    Plan(ExponentPlan),
    Sample(SampleJob),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub job: Job,
    pub format: Format,
    pub out: PathBuf,
    pub threads: usize,
}

fn parse_count(field: &str, s: &str) -> Result<usize, UsageError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| usage(format!("invalid value {s:?} for --{field}: expected a positive integer")))?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15) {
        return Err(usage(format!(
            "invalid value {s:?} for --{field}: expected a positive integer"
        )));
    }
    Ok(v as usize)
}

/// Parses `1e4,1e5,1e6` style lists of counts.
pub fn parse_n_grid(s: &str) -> Result<Vec<usize>, UsageError> {
    let grid = s
        .split(',')
        .map(|t| parse_count("n-grid", t))
        .collect::<Result<Vec<_>, _>>()?;
    if grid.is_empty() || grid[0] == 0 {
        return Err(usage("--n-grid entries must be positive"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--n-grid must be strictly increasing"));
    }
    Ok(grid)
}

fn parse_reals(field: &str, s: &str) -> Result<Vec<f64>, UsageError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("invalid value {t:?} for --{field}")))
        })
        .collect()
}

fn load_file(path: &Path) -> Result<Options, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("malformed config file {}: {e}", path.display())))
}

/// Validates `argv` (including the program name) into a [`RunConfig`].
/// Clap's own errors (unknown flags, `--help`) are returned unchanged.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseOutcome::Clap)?;
    resolve(cli).map_err(ParseOutcome::Usage)
}

#[derive(Debug)]
pub enum ParseOutcome {
    Clap(clap::Error),
    Usage(UsageError),
}

fn resolve(cli: Cli) -> Result<RunConfig, UsageError> {
    let (command, opts) = match cli.command {
        CommandArgs::Estimate(o) => (Command::Estimate, o),
        CommandArgs::Clt(o) => (Command::Clt, o),
        CommandArgs::Sandwich(o) => (Command::Sandwich, o),
        CommandArgs::GapRate(o) => (Command::GapRate, o),
        CommandArgs::WeightSum(o) => (Command::WeightSum, o),
        CommandArgs::Plan(o) => (Command::Plan, o),
        CommandArgs::Sample(o) => (Command::Sample, o),
    };
    let opts = match &opts.config {
        Some(path) => {
            let file = load_file(path)?;
            opts.merge(file)
        }
        None => opts,
    };
    let r = Resolver { command, opts };
    let job = r.job()?;
    let format = r.opts.format.unwrap_or(Format::Json);
    let out = r
        .opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.{}", command.name(), format.extension())));
    Ok(RunConfig {
        command,
        job,
        format,
        out,
        threads: r.opts.threads.unwrap_or(0),
    })
}

struct Resolver {
    command: Command,
    opts: Options,
}

impl Resolver {
    fn missing(&self, field: &str) -> UsageError {
        usage(format!(
            "missing required option --{field} for `{}`",
            self.command.name()
        ))
    }

    fn frontier(&self) -> Result<Frontier, UsageError> {
        let spec = self.opts.frontier.as_deref().unwrap_or("constant:1");
        spec.parse()
            .map_err(|e| usage(format!("invalid value for --frontier: {e}")))
    }

    fn kernel(&self) -> Result<Kernel, UsageError> {
        match &self.opts.kernel {
            Some(s) => s
                .parse()
                .map_err(|e| usage(format!("invalid value for --kernel: {e}"))),
            None => Ok(Kernel::default()),
        }
    }

    fn plan(&self) -> Result<ExponentPlan, UsageError> {
        plan_sequences(
            self.opts.alpha.unwrap_or(1.0),
            self.opts.a.unwrap_or(0.9),
            self.opts.b.unwrap_or(0.5),
        )
        .map_err(|e| usage(format!("invalid exponent: {e}")))
    }

    fn n(&self) -> Result<Option<usize>, UsageError> {
        match &self.opts.n {
            Some(s) => {
                let n = parse_count("n", s)?;
                if n == 0 {
                    return Err(usage("--n must be at least 1"));
                }
                Ok(Some(n))
            }
            None => Ok(None),
        }
    }

    fn n_grid(&self) -> Result<Vec<usize>, UsageError> {
        match &self.opts.n_grid {
            Some(s) => parse_n_grid(s),
            None => Ok(DEFAULT_N_GRID.to_vec()),
        }
    }

    fn xs(&self) -> Result<Vec<f64>, UsageError> {
        match &self.opts.x {
            Some(s) => parse_reals("x", s),
            None => Ok(vec![DEFAULT_X]),
        }
    }

    fn single_x(&self) -> Result<f64, UsageError> {
        let xs = self.xs()?;
        match xs.as_slice() {
            [x] => Ok(*x),
            _ => Err(usage(format!(
                "--x takes a single value for `{}`",
                self.command.name()
            ))),
        }
    }

    fn replicates(&self) -> Result<usize, UsageError> {
        match self.opts.replicates.unwrap_or(DEFAULT_REPLICATES) {
            0 => Err(usage("--replicates must be at least 1")),
            r => Ok(r),
        }
    }

    fn seed(&self) -> u64 {
        self.opts.seed.unwrap_or(DEFAULT_SEED)
    }

    fn gamma(&self, default: GammaPolicyArg) -> Result<GammaPolicy, UsageError> {
        let policy = match (self.opts.gamma_policy, self.opts.gamma) {
            (Some(p), _) => p,
            (None, Some(_)) => GammaPolicyArg::Fixed,
            (None, None) => default,
        };
        match policy {
            GammaPolicyArg::InvSqrtK => {
                if self.opts.gamma.is_some() {
                    return Err(usage("--gamma conflicts with --gamma-policy inv-sqrt-k"));
                }
                Ok(GammaPolicy::InverseSqrtStrips)
            }
            GammaPolicyArg::Fixed => {
                let g = self.opts.gamma.unwrap_or(DEFAULT_GAMMA);
                if !(g > 0.0 && g < 1.0) {
                    return Err(usage(format!("--gamma must lie in (0, 1), got {g}")));
                }
                Ok(GammaPolicy::Fixed(g))
            }
        }
    }

    /// `(n, k, h)` from explicit `--k`/`--h` where given, else from the plan.
    fn estimator_params(&self, n: usize) -> Result<EstimatorParams, UsageError> {
        let plan = self.plan()?;
        let k = self.opts.k.unwrap_or_else(|| plan.strips(n));
        let h = self.opts.h.unwrap_or_else(|| plan.bandwidth(n));
        EstimatorParams::new(n, k, h, self.kernel()?)
            .map_err(|e| usage(format!("invalid estimator parameters: {e}")))
    }

    fn job(&self) -> Result<Job, UsageError> {
        Ok(match self.command {
            Command::Plan => Job::Plan(self.plan()?),
            Command::Estimate => {
                let n = self.n()?.ok_or_else(|| self.missing("n"))?;
                let xs = self.xs()?;
                if let Some(bad) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(usage(format!("--x values must lie in [0, 1], got {bad}")));
                }
                Job::Estimate(EstimateJob {
                    frontier: self.frontier()?,
                    params: self.estimator_params(n)?,
                    xs,
                    seed: self.seed(),
                })
            }
            Command::Sample => Job::Sample(SampleJob {
                frontier: self.frontier()?,
                n: self.n()?.ok_or_else(|| self.missing("n"))?,
                seed: self.seed(),
                process: self.opts.process.unwrap_or(Process::Uniform),
            }),
            Command::Clt => {
                let plan = self.plan()?;
                if !plan.valid {
                    return Err(usage(format!(
                        "exponents a = {}, b = {}, alpha = {} violate the rate conditions (see `plan`)",
                        plan.a, plan.b, plan.alpha
                    )));
                }
                Job::Clt(CltConfig {
                    frontier: self.frontier()?,
                    kernel: self.kernel()?,
                    plan,
                    n_grid: self.n_grid()?,
                    replicates: self.replicates()?,
                    x: self.single_x()?,
                    master_seed: self.seed(),
                })
            }
            Command::Sandwich => {
                let n = self.n()?.unwrap_or(DEFAULT_SANDWICH_N);
                Job::Sandwich(SandwichConfig {
                    frontier: self.frontier()?,
                    params: self.estimator_params(n)?,
                    gamma: self.gamma(GammaPolicyArg::Fixed)?,
                    replicates: self.replicates()?,
                    x: self.single_x()?,
                    master_seed: self.seed(),
                    grid_index: 0,
                })
            }
            Command::GapRate => Job::GapRate(GapRateConfig {
                frontier: self.frontier()?,
                plan: self.plan()?,
                gamma_policy: self.gamma(GammaPolicyArg::InvSqrtK)?,
                n_grid: self.n_grid()?,
                replicates: self.replicates()?,
                master_seed: self.seed(),
            }),
            Command::WeightSum => {
                let plan = self.plan()?;
                if !plan.valid {
                    return Err(usage("weight-sum needs exponents satisfying the rate conditions"));
                }
                Job::WeightSum(WeightSumJob {
                    kernel: self.kernel()?,
                    plan,
                    n_grid: self.n_grid()?,
                    x: self.single_x()?,
                })
            }
        })
    }
}
