//! Command-line front end: sampling runs, heuristic minimization,
//! small-system verification and critical-curve queries.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 verification
//! failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use shaken::critical::{critical_solve, CriticalConstraint};
use shaken::dynamics::{random_configuration, run, ChainTarget, KernelChoice, RunOptions};
use shaken::exact::{run_verification, VerifyBudgets};
use shaken::graph::{
    build_doubling, orient, parse_graph, DoublingGraph, InteractionGraph, OrientStrategy,
    Orientation,
};
use shaken::lattice::{triangular_doubling, z2_doubling};
use shaken::optimize::{
    baseline_solve, paired_flip_budget, q_threshold_doubling, solve_doubling, Schedule,
    SolveOptions,
};

#[derive(Parser)]
#[command(
    name = "shaken",
    version,
    about = "Parallel spin dynamics on weighted graphs: sampling, optimization, verification, critical curve"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sampling chain and write its trace
    Sample(SampleArgs),
    /// Minimize the instance Hamiltonian heuristically
    Optimize(OptimizeArgs),
    /// Run the exact small-system verification suite
    Verify(VerifyArgs),
    /// Solve the triangular-lattice critical equation
    Critical(CriticalArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LatticeKind {
    Z2,
    Triangular,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Shaken,
    ShakenReversed,
    Heatbath,
}

impl KernelArg {
    fn choice(self) -> KernelChoice {
        match self {
            KernelArg::Shaken => KernelChoice::Shaken,
            KernelArg::ShakenReversed => KernelChoice::ShakenReversed,
            KernelArg::Heatbath => KernelChoice::HeatBath,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrientArg {
    Canonical,
    Seeded,
}

/// Where the instance comes from: a graph file or a built-in lattice.
#[derive(Args)]
struct SourceArgs {
    /// Instance file in the graph text format
    #[arg(long, conflicts_with_all = ["lattice", "ea"])]
    instance: Option<PathBuf>,

    /// Orientation file (`o <u> <v>` lines) for --instance
    #[arg(long, requires = "instance")]
    orientation: Option<PathBuf>,

    /// Orientation strategy when no orientation file is given; canonical
    /// unless set
    #[arg(long, value_enum)]
    orient: Option<OrientArg>,

    /// Seed of the seeded orientation strategy
    #[arg(long)]
    orient_seed: Option<u64>,

    /// Built-in periodic lattice
    #[arg(long, value_enum, conflicts_with = "ea")]
    lattice: Option<LatticeKind>,

    /// Lattice side length, 4 unless set
    #[arg(long = "L")]
    side: Option<usize>,

    /// Uniform coupling of a built-in lattice, 1 unless set
    #[arg(long = "J")]
    coupling: Option<f64>,

    /// Uniform external field of the square lattice
    #[arg(long)]
    lambda: Option<f64>,

    /// Frozen boundary site of the square lattice, `<site>:<+1|-1>`,
    /// repeatable
    #[arg(long = "freeze")]
    freeze: Vec<String>,

    /// Random-coupling benchmark instance of this side length
    #[arg(long)]
    ea: Option<usize>,

    /// Seed of the benchmark instance couplings
    #[arg(long, default_value_t = 0)]
    ea_seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Self-interaction weight (required by the parallel kernels)
    #[arg(long)]
    q: Option<f64>,

    #[arg(long, value_enum, default_value = "shaken")]
    kernel: KernelArg,

    #[arg(long, default_value_t = 0)]
    sweeps: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Scales couplings, fields and q together before anything else runs
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// Geometric per-sweep factor on couplings and fields (q stays fixed)
    #[arg(long, default_value_t = 1.0)]
    ramp: f64,

    /// Worker threads for the site loops; never changes results
    #[arg(long, default_value_t = 1)]
    threads: usize,

    /// Overwrite existing output files
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[command(flatten)]
    run: RunArgs,

    /// Trace CSV path
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,

    /// Also write the summary lines to this file
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[command(flatten)]
    run: RunArgs,

    /// Trace CSV path
    #[arg(long, default_value = "optimize_trace.csv")]
    trace: PathBuf,

    /// Also write the summary lines to this file
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Base seed of the randomized instances
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Override a residual budget, `<check>=<value>`, repeatable
    #[arg(long = "budget")]
    budgets: Vec<String>,

    /// Also write the machine-readable summary to this file
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overwrite an existing output file
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CriticalArgs {
    /// Fix one parameter, `J=<value>` or `q=<value>`
    #[arg(long, conflicts_with = "limit")]
    fix: Option<String>,

    /// Solve a limiting case of the curve
    #[arg(long, value_enum)]
    limit: Option<LimitArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LimitArg {
    /// q = J line (square pair lattice)
    Square,
    /// q = 0 (couplings only)
    Hexagonal,
    /// q -> infinity (copies collapse)
    Triangular,
}

enum CliError {
    Usage(String),
    Io(String),
    VerificationFailed,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "error: {m}"),
            CliError::VerificationFailed => write!(f, "error: verification failed"),
        }
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::VerificationFailed => 3,
        }
    }
}

fn usage<E: fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Critical(args) => cmd_critical(args),
    };
    match outcome {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.code());
        }
    }
}

fn parse_freezes(specs: &[String]) -> Result<Vec<(usize, i8)>, CliError> {
    specs
        .iter()
        .map(|s| {
            let (site, spin) = s
                .split_once(':')
                .ok_or_else(|| usage(format!("--freeze expects <site>:<+1|-1>, got '{s}'")))?;
            let site: usize = site
                .parse()
                .map_err(|_| usage(format!("bad site in --freeze '{s}'")))?;
            let spin = match spin {
                "+1" | "1" | "+" => 1,
                "-1" | "-" => -1,
                other => return Err(usage(format!("bad spin '{other}' in --freeze '{s}'"))),
            };
            Ok((site, spin))
        })
        .collect()
}

// Scale couplings and fields by beta, keeping the frozen boundary.
fn scale_graph(g: &InteractionGraph, beta: f64) -> InteractionGraph {
    if beta == 1.0 {
        return g.clone();
    }
    let edges: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .map(|e| (e.u, e.v, beta * e.coupling))
        .collect();
    let fields: Vec<f64> = g.fields().iter().map(|&l| beta * l).collect();
    let frozen: Vec<(usize, i8)> = (0..g.vertex_count())
        .filter_map(|x| g.frozen_spin(x).map(|s| (x, s)))
        .collect();
    InteractionGraph::with_parallel_edges(fields, &edges, &frozen)
        .expect("scaling preserves validity")
}

/// Build the doubled instance a run needs. `beta` multiplies couplings,
/// fields and q before the threshold or any dynamics sees them.
fn build_instance(source: &SourceArgs, run: &RunArgs) -> Result<DoublingGraph, CliError> {
    let beta = run.beta;
    if !beta.is_finite() || beta <= 0.0 {
        return Err(usage("--beta must be positive and finite"));
    }
    let needs_q = run.kernel != KernelArg::Heatbath;
    let q = match run.q {
        Some(q) => q * beta,
        None if needs_q => {
            return Err(usage("--q is required for the parallel kernels"));
        }
        None => 0.0,
    };

    if source.lattice.is_none()
        && (source.side.is_some()
            || source.coupling.is_some()
            || source.lambda.is_some()
            || !source.freeze.is_empty())
    {
        return Err(usage(
            "--L, --J, --lambda and --freeze apply to built-in lattices only",
        ));
    }
    if source.instance.is_none() && (source.orient.is_some() || source.orient_seed.is_some()) {
        return Err(usage("--orient and --orient-seed apply to --instance only"));
    }

    if let Some(kind) = source.lattice {
        let frozen = parse_freezes(&source.freeze)?;
        let coupling = source.coupling.unwrap_or(1.0);
        return match kind {
            LatticeKind::Z2 => z2_doubling(
                source.side.unwrap_or(4),
                beta * coupling,
                q,
                beta * source.lambda.unwrap_or(0.0),
                &frozen,
            )
            .map_err(usage),
            LatticeKind::Triangular => {
                if source.lambda.is_some() {
                    return Err(usage("the triangular lattice takes no external field"));
                }
                if !frozen.is_empty() {
                    return Err(usage("the triangular lattice takes no frozen boundary"));
                }
                triangular_doubling(source.side.unwrap_or(4), beta * coupling, q)
                    .map_err(usage)
            }
        };
    }

    if let Some(side) = source.ea {
        let g = shaken::optimize::ea_instance(side, source.ea_seed).map_err(usage)?;
        let g = scale_graph(&g, beta);
        let o = Orientation::from_edge_order(&g);
        return build_doubling(g, &o, q).map_err(usage);
    }

    let path = source
        .instance
        .as_ref()
        .ok_or_else(|| usage("one instance source is required: --instance, --lattice or --ea"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_graph(&text)
        .map_err(|e| CliError::Io(format!("cannot parse {}: {e}", path.display())))?;
    let g = scale_graph(&parsed.graph, beta);
    let orientation = match &source.orientation {
        Some(opath) => {
            let otext = fs::read_to_string(opath)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", opath.display())))?;
            Orientation::parse_external(&otext, &g, &parsed.external_ids)
                .map_err(|e| CliError::Io(format!("cannot parse {}: {e}", opath.display())))?
        }
        None => match source.orient.unwrap_or(OrientArg::Canonical) {
            OrientArg::Canonical => orient(&g, OrientStrategy::Canonical),
            OrientArg::Seeded => {
                orient(&g, OrientStrategy::Seeded(source.orient_seed.unwrap_or(0)))
            }
        },
    };
    build_doubling(g, &orientation, q).map_err(usage)
}

fn write_guarded(path: &Path, content: &str, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Io(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    fs::write(path, content).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn with_pool<T>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| usage(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn run_chain(d: &DoublingGraph, args: &RunArgs) -> Result<shaken::RunResult, CliError> {
    let initial = random_configuration(d.parent(), args.seed);
    let opts = RunOptions {
        sweeps: args.sweeps,
        seed: args.seed,
        coupling_ramp: args.ramp,
        ..Default::default()
    };
    let kernel = args.kernel.choice();
    with_pool(args.threads, || {
        run(kernel, ChainTarget::Doubling(d), &initial, &opts)
    })?
    .map_err(usage)
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let d = build_instance(&args.source, &args.run)?;
    let result = run_chain(&d, &args.run)?;
    write_guarded(
        &args.trace,
        &shaken::dynamics::trace_to_csv(&result.trace),
        args.run.force,
    )?;
    let mut summary = String::new();
    summary.push_str(&format!("kernel {}\n", args.run.kernel.choice().name()));
    summary.push_str(&format!("vertices {}\n", d.vertex_count()));
    summary.push_str(&format!("sweeps {}\n", args.run.sweeps));
    summary.push_str(&format!("seed {}\n", args.run.seed));
    summary.push_str(&format!("attempted_updates {}\n", result.attempted_updates));
    summary.push_str(&format!("mean_energy {}\n", result.state.mean_energy));
    summary.push_str(&format!(
        "mean_abs_magnetization {}\n",
        result.state.mean_abs_magnetization
    ));
    summary.push_str(&format!("final_energy {}\n", result.trace.last().unwrap().energy));
    summary.push_str(&format!("best_energy {}\n", result.best_energy));
    print!("{summary}");
    if let Some(path) = &args.summary {
        write_guarded(path, &summary, args.run.force)?;
    }
    Ok(())
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let d = build_instance(&args.source, &args.run)?;
    let threshold = q_threshold_doubling(&d);
    let guaranteed = d.q() > threshold;
    if !guaranteed && args.run.kernel != KernelArg::Heatbath {
        eprintln!(
            "warning: q = {} does not exceed the threshold {threshold}; the minimum identity is not guaranteed",
            d.q()
        );
    }
    let schedule = Schedule { coupling_ramp: args.run.ramp };
    // --sweeps counts parallel sweeps; the baseline kernel receives the
    // paired budget of 2|V| attempted flips per sweep
    let result = with_pool(args.run.threads, || {
        if args.run.kernel == KernelArg::Heatbath {
            baseline_solve(
                d.parent(),
                paired_flip_budget(d.parent(), args.run.sweeps),
                args.run.seed,
                schedule,
            )
        } else {
            let opts = SolveOptions {
                q: d.q(),
                kernel: args.run.kernel.choice(),
                sweeps: args.run.sweeps,
                seed: args.run.seed,
                schedule,
            };
            solve_doubling(&d, &opts)
        }
    })?
    .map_err(usage)?;
    write_guarded(
        &args.trace,
        &shaken::dynamics::trace_to_csv(&result.trace),
        args.run.force,
    )?;
    let time_to_best = result
        .trace
        .iter()
        .find(|r| r.best_energy == result.best_energy)
        .map(|r| r.sweep)
        .unwrap_or(0);
    let mut summary = String::new();
    summary.push_str(&format!("kernel {}\n", args.run.kernel.choice().name()));
    summary.push_str(&format!("q {}\n", d.q()));
    summary.push_str(&format!("q_threshold {threshold}\n"));
    summary.push_str(&format!("guaranteed {guaranteed}\n"));
    summary.push_str(&format!("sweeps {}\n", result.sweeps));
    summary.push_str(&format!("seed {}\n", args.run.seed));
    summary.push_str(&format!("schedule {}\n", result.schedule));
    summary.push_str(&format!("attempted_updates {}\n", result.attempted_updates));
    summary.push_str(&format!("time_to_best {time_to_best}\n"));
    summary.push_str(&format!("best_energy {}\n", result.best_energy));
    summary.push_str(&format!("best_configuration {}\n", result.best.to_pm_string()));
    print!("{summary}");
    if let Some(path) = &args.summary {
        write_guarded(path, &summary, args.run.force)?;
    }
    Ok(())
}

fn apply_budget_overrides(
    budgets: &mut VerifyBudgets,
    overrides: &[String],
) -> Result<(), CliError> {
    for spec in overrides {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("--budget expects <check>=<value>, got '{spec}'")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| usage(format!("bad budget value in '{spec}'")))?;
        match name {
            "stationarity" => budgets.stationarity = value,
            "reversibility" => budgets.reversibility = value,
            "marginal_identity" => budgets.marginal_identity = value,
            "alternate_stationarity" => budgets.alternate_stationarity = value,
            "alternate_nonreversibility" => budgets.witness_floor = value,
            "unpacked_weight" => budgets.unpacked_weight = value,
            "minimum_identity" => budgets.minimum_identity = value,
            other => return Err(usage(format!("unknown check '{other}' in --budget"))),
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let mut budgets = VerifyBudgets::default();
    apply_budget_overrides(&mut budgets, &args.budgets)?;
    let report = run_verification(args.seed, &budgets);
    print!("{report}");
    println!("---");
    print!("{}", report.summary_lines());
    if let Some(path) = &args.out {
        write_guarded(path, &report.summary_lines(), args.force)?;
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn cmd_critical(args: CriticalArgs) -> Result<(), CliError> {
    let constraint = match (&args.fix, args.limit) {
        (Some(spec), None) => {
            let (name, value) = spec
                .split_once('=')
                .ok_or_else(|| usage(format!("--fix expects J=<value> or q=<value>, got '{spec}'")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| usage(format!("bad value in --fix '{spec}'")))?;
            match name {
                "J" | "j" => CriticalConstraint::FixedCoupling(value),
                "q" | "Q" => CriticalConstraint::FixedQ(value),
                other => return Err(usage(format!("unknown parameter '{other}' in --fix"))),
            }
        }
        (None, Some(limit)) => match limit {
            LimitArg::Square => CriticalConstraint::EqualCouplingQ,
            LimitArg::Hexagonal => CriticalConstraint::FixedQ(0.0),
            LimitArg::Triangular => CriticalConstraint::InfiniteQ,
        },
        _ => return Err(usage("exactly one of --fix or --limit is required")),
    };
    let point = critical_solve(constraint).map_err(usage)?;
    let residual = if point.q.is_infinite() {
        1.0 + point.t.powi(3) * point.s - 3.0 * point.t * point.s - 3.0 * point.t * point.t
    } else {
        shaken::critical::critical_residual(point.coupling, point.q)
    };
    println!("J {}", point.coupling);
    println!("q {}", point.q);
    println!("t {}", point.t);
    println!("s {}", point.s);
    println!("residual {residual:e}");
    Ok(())
}
