//! Heuristic ground-state search with the parallel kernels, random-coupling
//! benchmark instances and a matched single-spin-flip baseline.
//!
//! Above the self-interaction threshold the pair energy is minimized on the
//! diagonal, so chasing low-energy diagonal configurations of the pair chain
//! minimizes the original Hamiltonian.

use std::fmt;
use std::time::{Duration, Instant};

use crate::dynamics::{
    random_configuration, run, ChainTarget, DynamicsError, KernelChoice, RunOptions, TraceRow,
};
use crate::graph::{build_doubling, DoublingGraph, GraphError, InteractionGraph, Orientation};
use crate::hamiltonian::SpinConfiguration;
use crate::rng::{CounterRng, Phase};

/// Smallest `q` whose strict excess guarantees the minimum identity: the
/// worst vertex's larger one-sided sum of absolute couplings plus its
/// absolute field.
pub fn q_threshold(g: &InteractionGraph, orientation: &Orientation) -> f64 {
    let n = g.vertex_count();
    let mut in_sum = vec![0.0f64; n];
    let mut out_sum = vec![0.0f64; n];
    for (e, &(u, v)) in g.edges().iter().zip(orientation.directed()) {
        debug_assert!((u == e.u && v == e.v) || (u == e.v && v == e.u));
        out_sum[u] += e.coupling.abs();
        in_sum[v] += e.coupling.abs();
    }
    (0..n)
        .map(|x| (in_sum[x] + g.field(x).abs()).max(out_sum[x] + g.field(x).abs()))
        .fold(0.0, f64::max)
}

/// Threshold read off an already doubled graph.
pub fn q_threshold_doubling(d: &DoublingGraph) -> f64 {
    (0..d.vertex_count())
        .map(|x| {
            let lam = d.parent().field(x).abs();
            let into: f64 = d.edges_into_copy2(x).iter().map(|&(_, j)| j.abs()).sum();
            let from: f64 = d.edges_from_copy1(x).iter().map(|&(_, j)| j.abs()).sum();
            (into + lam).max(from + lam)
        })
        .fold(0.0, f64::max)
}

/// Random-coupling torus benchmark: `l x l` periodic square lattice, every
/// edge independently +1 or -1 with equal probability, zero field.
/// Deterministic in `seed`; the edge order encodes the standard lattice
/// orientation for [`Orientation::from_edge_order`].
pub fn ea_instance(l: usize, seed: u64) -> Result<InteractionGraph, crate::lattice::LatticeError> {
    let torus = crate::lattice::TorusLattice::new(l)?;
    let rng = CounterRng::new(seed);
    let n = torus.sites();
    let mut edges = Vec::with_capacity(2 * n);
    for x in 0..n {
        for (slot, y) in [(0u64, torus.up(x)), (1, torus.right(x))] {
            let sign = if rng.coin(0, Phase::Instance, (x as u64) << 1 | slot) {
                1.0
            } else {
                -1.0
            };
            edges.push((x, y, sign));
        }
    }
    Ok(InteractionGraph::with_parallel_edges(vec![0.0; n], &edges, &[])?)
}

/// Parameter schedule of a run. The default holds everything constant; a
/// ramp factor above 1 cools the system geometrically by scaling couplings
/// and fields each sweep while `q` stays fixed. This annealing knob is an
/// extension beyond the plain dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub coupling_ramp: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { coupling_ramp: 1.0 }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coupling_ramp == 1.0 {
            write!(f, "constant")
        } else {
            write!(f, "geometric ramp {}", self.coupling_ramp)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub q: f64,
    pub kernel: KernelChoice,
    pub sweeps: u64,
    pub seed: u64,
    pub schedule: Schedule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            q: 1.0,
            kernel: KernelChoice::Shaken,
            sweeps: 1000,
            seed: 0,
            schedule: Schedule::default(),
        }
    }
}

/// One heuristic minimization run and everything needed to compare it.
#[derive(Debug, Clone)]
pub struct OptimizationRun {
    pub label: String,
    pub kernel: KernelChoice,
    pub q: f64,
    pub sweeps: u64,
    pub seed: u64,
    pub schedule: Schedule,
    pub best_energy: f64,
    pub best: SpinConfiguration,
    /// Best-so-far after each sweep, including the initial state.
    pub trace: Vec<TraceRow>,
    /// Smallest visited pair energy; infinity for the baseline.
    pub min_pair_energy: f64,
    pub attempted_updates: u64,
    pub wall_clock: Duration,
    /// Set when `q` does not strictly exceed the threshold, voiding the
    /// minimum-identity guarantee.
    pub below_threshold: bool,
}

#[derive(Debug)]
pub enum SolveError {
    Graph(GraphError),
    Dynamics(DynamicsError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Graph(e) => write!(f, "{e}"),
            SolveError::Dynamics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<GraphError> for SolveError {
    fn from(e: GraphError) -> Self {
        SolveError::Graph(e)
    }
}

impl From<DynamicsError> for SolveError {
    fn from(e: DynamicsError) -> Self {
        SolveError::Dynamics(e)
    }
}

/// Minimize over a prebuilt doubling. Starts from the seeded random
/// configuration and tracks the best diagonal state after each full step.
pub fn solve_doubling(d: &DoublingGraph, opts: &SolveOptions) -> Result<OptimizationRun, SolveError> {
    let start = Instant::now();
    let threshold = q_threshold_doubling(d);
    let initial = random_configuration(d.parent(), opts.seed);
    let run_opts = RunOptions {
        sweeps: opts.sweeps,
        seed: opts.seed,
        coupling_ramp: opts.schedule.coupling_ramp,
        ..Default::default()
    };
    let result = run(opts.kernel, ChainTarget::Doubling(d), &initial, &run_opts)?;
    Ok(OptimizationRun {
        label: format!("{}-q{}-seed{}", opts.kernel.name(), d.q(), opts.seed),
        kernel: opts.kernel,
        q: d.q(),
        sweeps: opts.sweeps,
        seed: opts.seed,
        schedule: opts.schedule,
        best_energy: result.best_energy,
        best: result.best,
        trace: result.trace,
        min_pair_energy: result.min_pair_energy,
        attempted_updates: result.attempted_updates,
        wall_clock: start.elapsed(),
        below_threshold: d.q() <= threshold,
    })
}

/// Double `g` along `orientation` with `opts.q` and minimize.
pub fn solve(
    g: &InteractionGraph,
    orientation: &Orientation,
    opts: &SolveOptions,
) -> Result<OptimizationRun, SolveError> {
    let d = build_doubling(g.clone(), orientation, opts.q)?;
    solve_doubling(&d, opts)
}

/// Attempted updates a parallel run of `sweeps` sweeps burns: two half-steps
/// over all vertices each.
pub fn paired_flip_budget(g: &InteractionGraph, sweeps: u64) -> u64 {
    2 * g.vertex_count() as u64 * sweeps
}

/// Matched single-spin-flip run: `flips` heat-bath updates, rounded up to
/// whole sweep-equivalents of one flip per free site.
pub fn baseline_solve(
    g: &InteractionGraph,
    flips: u64,
    seed: u64,
    schedule: Schedule,
) -> Result<OptimizationRun, SolveError> {
    let start = Instant::now();
    let free = g.free_count() as u64;
    let sweeps = if free == 0 { 0 } else { flips.div_ceil(free) };
    let initial = random_configuration(g, seed);
    let run_opts = RunOptions {
        sweeps,
        seed,
        coupling_ramp: schedule.coupling_ramp,
        ..Default::default()
    };
    let result = run(KernelChoice::HeatBath, ChainTarget::Graph(g), &initial, &run_opts)?;
    Ok(OptimizationRun {
        label: format!("heatbath-seed{seed}"),
        kernel: KernelChoice::HeatBath,
        q: f64::NAN,
        sweeps,
        seed,
        schedule,
        best_energy: result.best_energy,
        best: result.best,
        trace: result.trace,
        min_pair_energy: f64::INFINITY,
        attempted_updates: result.attempted_updates,
        wall_clock: start.elapsed(),
        below_threshold: false,
    })
}

/// Comparison table over runs, preserving input order.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub best_energy: f64,
    /// First sweep at which the best energy was reached.
    pub time_to_best: u64,
    pub attempted_updates: u64,
    pub wall_clock: Duration,
}

/// Tabulate runs for side-by-side comparison.
pub fn compare(runs: &[OptimizationRun]) -> CompareReport {
    let rows = runs
        .iter()
        .map(|r| {
            let time_to_best = r
                .trace
                .iter()
                .find(|row| row.best_energy == r.best_energy)
                .map(|row| row.sweep)
                .unwrap_or(0);
            CompareRow {
                label: r.label.clone(),
                best_energy: r.best_energy,
                time_to_best,
                attempted_updates: r.attempted_updates,
                wall_clock: r.wall_clock,
            }
        })
        .collect();
    CompareReport { rows }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:>14} {:>12} {:>12} {:>10}",
            "run", "best_energy", "time_to_best", "attempts", "wall_s"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<28} {:>14.6} {:>12} {:>12} {:>10.3}",
                r.label,
                r.best_energy,
                r.time_to_best,
                r.attempted_updates,
                r.wall_clock.as_secs_f64()
            )?;
        }
        Ok(())
    }
}
