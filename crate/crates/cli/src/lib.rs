//! Command-line front end for `hamming-boot`.

pub mod commands;
pub mod grid;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hamming_boot::io::{
    read_config, DetectQuery, EmpiricsQuery, ExponentsMode, ExponentsQuery, Format, LimitMode, LimitsQuery,
    OracleQuery, SweepQuery, Task,
};
use hamming_boot::montecarlo::{default_ci_level, EventKind, ExperimentSpec, Scaling, SweepGrid};
use hamming_boot::{Error, Rational, Result, TorusShape};

use commands::Sink;

#[derive(Debug, Parser)]
#[command(name = "hamming-boot", version, about = "Bootstrap percolation on the Hamming torus")]
pub struct Cli {
    /// Output encoding.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Write the table here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// More diagnostics on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LimitModeArg {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
    Good,
    Poisson,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExponentsModeArg {
    Table,
    Epl,
    Figure,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate event probabilities for one experiment.
    Simulate(SimulateArgs),
    /// Run `simulate` over a grid of n, a and alpha.
    Sweep(SweepArgs),
    /// Evaluate the closed-form limits on a grid of a.
    Limits(LimitsArgs),
    /// Exponent bounds, EPL bounds or plot series.
    Exponents(ExponentsArgs),
    /// Run the detectors and the dynamics on a configuration file.
    Detect(DetectArgs),
    /// Exact enumeration against Monte Carlo, plus the engine battery.
    Oracle(OracleArgs),
    /// Empirical configuration means against their Poisson limits (d = 3, theta = 3).
    Empirics(EmpiricsArgs),
    /// Execute a TOML or JSON run configuration.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct ShapeArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    theta: usize,
}

#[derive(Debug, Args)]
struct McArgs {
    /// Comma-separated event kinds.
    #[arg(long, default_value = "spanned")]
    events: String,
    #[arg(long, default_value_t = 1000)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = default_ci_level())]
    ci_level: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long)]
    n: usize,
    /// Raw density; excludes --a/--alpha.
    #[arg(long, conflicts_with_all = ["a", "alpha"])]
    p: Option<f64>,
    #[arg(long, requires = "alpha")]
    a: Option<f64>,
    /// Exponent as a rational or exact decimal.
    #[arg(long, requires = "a")]
    alpha: Option<String>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Side lengths, e.g. `50,100,150` or `20..200:20`.
    #[arg(long)]
    n: String,
    #[arg(long, conflicts_with_all = ["a", "alpha"])]
    p: Option<f64>,
    /// Prefactors, e.g. `0.5,1,2` or `0.25..4:0.25`.
    #[arg(long, requires = "alpha")]
    a: Option<String>,
    #[arg(long, requires = "a")]
    alpha: Option<String>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct LimitsArgs {
    #[arg(long, value_enum)]
    mode: LimitModeArg,
    #[arg(long)]
    theta: Option<usize>,
    #[arg(long)]
    a: String,
}

#[derive(Debug, Args)]
struct ExponentsArgs {
    #[arg(long)]
    d: usize,
    /// Thresholds, e.g. `2..12`.
    #[arg(long)]
    theta: String,
    #[arg(long, value_enum, default_value = "table")]
    mode: ExponentsModeArg,
    /// Abscissae for the β curves in figure mode.
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// JSON file with `d`, `n`, `theta` and 1-based `open` coordinates.
    input: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value = "spanned")]
    event: String,
    #[arg(long, default_value_t = 100_000)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = default_ci_level())]
    ci_level: f64,
    #[arg(long, default_value_t = 500)]
    engine_instances: u64,
}

#[derive(Debug, Args)]
struct EmpiricsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 2000)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
}

fn parse_events(s: &str) -> Result<Vec<EventKind>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse()).collect()
}

fn experiment(shape: TorusShape, scaling: Scaling, mc: &McArgs) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(shape, scaling, parse_events(&mc.events)?, mc.replicas, mc.seed);
    spec.ci_level = mc.ci_level;
    Ok(spec)
}

fn scaling(p: Option<f64>, a: Option<f64>, alpha: Option<&Rational>) -> Result<Scaling> {
    match (p, a, alpha) {
        (Some(p), _, _) => Ok(Scaling::Raw { p }),
        (None, Some(a), Some(alpha)) => Ok(Scaling::Power { a, alpha: alpha.clone() }),
        _ => Err(Error::Domain("give either --p or both --a and --alpha".into())),
    }
}

/// Output settings after merging flags with a run configuration.
struct Resolved {
    task: Task,
    output: Option<PathBuf>,
    format: Format,
    verbosity: u8,
}

impl Cli {
    fn resolve(self) -> Result<Resolved> {
        let task = match self.command {
            Command::Run(r) => {
                let config = read_config(&r.config)?;
                return Ok(Resolved {
                    task: config.task,
                    output: self.output.or(config.output),
                    format: self.format.map_or(config.format, Into::into),
                    verbosity: self.verbose.max(config.verbosity),
                });
            }
            Command::Simulate(s) => {
                let shape = TorusShape::new(s.shape.d, s.n, s.shape.theta)?;
                let alpha = s.alpha.as_deref().map(str::parse::<Rational>).transpose()?;
                Task::Simulate(experiment(shape, scaling(s.p, s.a, alpha.as_ref())?, &s.mc)?)
            }
            Command::Sweep(s) => {
                let ns = grid::parse_int_list(&s.n)?;
                let a = s.a.as_deref().map(grid::parse_float_list).transpose()?.unwrap_or_default();
                let alpha = s.alpha.as_deref().map(grid::parse_rational_list).transpose()?.unwrap_or_default();
                let shape = TorusShape::new(s.shape.d, ns[0], s.shape.theta)?;
                let base = experiment(shape, scaling(s.p, a.first().copied(), alpha.first())?, &s.mc)?;
                Task::Sweep(SweepQuery { base, grid: SweepGrid { n: ns, a, alpha } })
            }
            Command::Limits(l) => Task::Limits(LimitsQuery {
                mode: match l.mode {
                    LimitModeArg::TwoD => LimitMode::TwoD,
                    LimitModeArg::ThreeD => LimitMode::ThreeD,
                    LimitModeArg::Good => LimitMode::Good,
                    LimitModeArg::Poisson => LimitMode::Poisson,
                },
                theta: l.theta,
                a: grid::parse_float_list(&l.a)?,
            }),
            Command::Exponents(e) => Task::Exponents(ExponentsQuery {
                d: e.d,
                theta: grid::parse_int_list(&e.theta)?,
                mode: match e.mode {
                    ExponentsModeArg::Table => ExponentsMode::Table,
                    ExponentsModeArg::Epl => ExponentsMode::Epl,
                    ExponentsModeArg::Figure => ExponentsMode::Figure,
                },
                alpha: e.alpha.as_deref().map(grid::parse_rational_list).transpose()?.unwrap_or_default(),
            }),
            Command::Detect(d) => Task::Detect(DetectQuery { input: d.input }),
            Command::Oracle(o) => Task::Oracle(OracleQuery {
                d: o.shape.d,
                n: o.n,
                theta: o.shape.theta,
                p: o.p,
                event: o.event.parse()?,
                replicas: o.replicas,
                seed: o.seed,
                ci_level: o.ci_level,
                engine_instances: o.engine_instances,
            }),
            Command::Empirics(e) => {
                Task::Empirics(EmpiricsQuery { n: e.n, a: e.a, replicas: e.replicas, seed: e.seed })
            }
        };
        Ok(Resolved { task, output: self.output, format: self.format.map_or(Format::Csv, Into::into), verbosity: self.verbose })
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.resolve().and_then(|r| {
        let sink = Sink { path: r.output.as_deref(), format: r.format };
        commands::execute(&r.task, &sink, r.verbosity)
    }) {
        Ok(notes) => {
            for n in notes {
                eprintln!("{n}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
