use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psglob::bench::{self, RunSpec, SuiteEntry, DEFAULT_CONDITION};
use psglob::{Error, InitStep, Status, Strategy, Vector};

const EXIT_NOT_CONVERGED: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Multi-point globalization solver: single solves, scaling sweeps,
/// PS-vs-BT comparisons and trial-point traces.
#[derive(Parser, Debug)]
#[command(name = "psglob", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and emit a CSV report row.
    Solve(SolveArgs),
    /// Sweep problems × sizes × thread counts and report median times and speedups.
    Scaling(ScalingArgs),
    /// Count function evaluations of PS and BT on a problem suite.
    Compare(CompareArgs),
    /// Record every trial point of the first outer iterations.
    Trace(TraceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Ps,
    Bt,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Ps => Strategy::Ps,
            StrategyArg::Bt => Strategy::Bt,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    Grad,
    Lbfgs,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Initial trial step.
    #[arg(long, value_enum, default_value = "grad")]
    init: InitArg,
    /// L-BFGS memory (with --init lbfgs).
    #[arg(long, default_value_t = 5)]
    memory: usize,
    /// Armijo constant in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Trial-step contraction factor in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Gradient-step scale in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Stop when ‖g‖ / max(‖x‖, 1) drops below this.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Outer-iteration cap; 100 by default, 1000 (grad) or 500 (lbfgs) for `compare`.
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long, default_value_t = 100)]
    max_inner: usize,
    /// Condition number of the `quadratic` problem.
    #[arg(long, default_value_t = DEFAULT_CONDITION)]
    condition: f64,
    /// Reserved for randomized fixtures.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn spec(&self, problem: &str, n: usize) -> RunSpec {
        self.spec_with_cap(problem, n, 100)
    }

    fn spec_with_cap(&self, problem: &str, n: usize, default_max_outer: usize) -> RunSpec {
        RunSpec {
            init: match self.init {
                InitArg::Grad => InitStep::Gradient,
                InitArg::Lbfgs => InitStep::Lbfgs { memory: self.memory },
            },
            rho: self.rho,
            eta: self.eta,
            epsilon: self.epsilon,
            tol: self.tol,
            max_outer: self.max_outer.unwrap_or(default_max_outer),
            max_inner: self.max_inner,
            condition: self.condition,
            seed: self.seed,
            ..RunSpec::new(problem, n)
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, value_enum, default_value = "ps")]
    strategy: StrategyArg,
    #[arg(long, env = "PSGLOB_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Starting point as comma-separated values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// CSV destination; standard output when absent.
    #[arg(long, env = "PSGLOB_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "cosine")]
    problem: Vec<String>,
    #[arg(long = "n", value_delimiter = ',', default_value = "100000,1000000,10000000")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', env = "PSGLOB_THREADS", default_value = "1,2,4,8")]
    threads: Vec<usize>,
    #[arg(long, value_enum, default_value = "ps")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    #[arg(long, env = "PSGLOB_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Problems to compare; the built-in suite when absent.
    #[arg(long, value_delimiter = ',')]
    problem: Option<Vec<String>>,
    /// Dimension for problems given with --problem.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ps,bt")]
    strategy: Vec<StrategyArg>,
    #[arg(long, env = "PSGLOB_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long, env = "PSGLOB_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[arg(long, default_value = "rosenbrock")]
    problem: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Starting point as comma-separated values (required).
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ps")]
    strategy: Vec<StrategyArg>,
    /// Number of outer iterations to trace.
    #[arg(long, default_value_t = 1)]
    k_max: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, env = "PSGLOB_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Other(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownProblem(_) | Error::InvalidParameter(_) | Error::LengthMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(File::create(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_solve(args: SolveArgs) -> Result<bool, CliError> {
    let spec = RunSpec {
        strategy: args.strategy.into(),
        threads: args.threads,
        repeat: args.repeat,
        x0: args.x0,
        ..args.solver.spec(&args.problem, args.n)
    };
    let (row, res) = bench::run_solve(&spec)?;
    println!(
        "{} n={} {}: {} after {} outer iterations, {} evaluations, f* = {:e}, scaled gradient norm = {:e}, {:.3} s",
        row.problem,
        row.n,
        row.strategy,
        row.status,
        row.outer_iters,
        row.total_fevals,
        row.f_star,
        row.gnorm_scaled,
        row.wall_seconds
    );
    if let Some(e) = &res.error {
        eprintln!("solver error: {e}");
    }
    bench::write_csv(sink(&args.out)?, &[row])?;
    Ok(res.status == Status::Converged)
}

fn cmd_scaling(args: ScalingArgs) -> Result<bool, CliError> {
    let base = RunSpec {
        strategy: args.strategy.into(),
        repeat: args.repeat,
        ..args.solver.spec("cosine", 1)
    };
    let rows = bench::run_scaling(&args.problem, &args.sizes, &args.threads, &base)?;
    bench::write_csv(sink(&args.out)?, &rows)?;
    Ok(true)
}

fn cmd_compare(args: CompareArgs) -> Result<bool, CliError> {
    let entries = match &args.problem {
        None => bench::builtin_suite(),
        Some(names) => names
            .iter()
            .map(|p| SuiteEntry { problem: p.clone(), n: args.n, condition: args.solver.condition })
            .collect(),
    };
    let strategies: Vec<Strategy> = args.strategy.iter().map(|&s| s.into()).collect();
    let cap = match args.solver.init {
        InitArg::Grad => 1000,
        InitArg::Lbfgs => 500,
    };
    let base = RunSpec { threads: args.threads, ..args.solver.spec_with_cap("compare", 1, cap) };
    let report = bench::run_compare(&entries, &strategies, &base)?;
    bench::write_csv(sink(&args.out)?, &report.rows)?;
    if let Some(s) = report.summary {
        let (ps, tie, bt) = s.percentages();
        eprintln!(
            "PS fewer evaluations: {ps:.1}%  equal: {tie:.1}%  BT fewer: {bt:.1}%  ({} compared, {} excluded)",
            s.included(),
            s.excluded
        );
    }
    Ok(true)
}

fn cmd_trace(args: TraceArgs) -> Result<bool, CliError> {
    let spec = RunSpec { x0: Some(args.x0.clone()), ..args.solver.spec(&args.problem, args.n) };
    let cfg = spec.config()?;
    let obj = spec.objective()?;
    if args.format == Format::Svg && obj.dimension() != 2 {
        return Err(CliError::Usage(format!("svg output needs n = 2, got n = {}", obj.dimension())));
    }
    let x0 = Vector::from_vec(args.x0)?;
    let strategies: Vec<Strategy> = args.strategy.iter().map(|&s| s.into()).collect();
    let traces = bench::run_trace(obj.as_ref(), &x0, &strategies, &cfg, args.k_max)?;
    let mut out = sink(&args.out)?;
    match args.format {
        Format::Csv => bench::write_trace_csv(out, &traces)?,
        Format::Svg => out.write_all(bench::trace_svg(obj.as_ref(), &traces)?.as_bytes())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Trace(a) => cmd_trace(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
    }
}
