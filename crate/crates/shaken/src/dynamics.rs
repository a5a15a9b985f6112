//! Stochastic kernels: the two parallel half-steps, their compositions, the
//! lifted pair step and a single-spin-flip heat-bath baseline, plus a
//! deterministic run loop with per-sweep observers.
//!
//! Every random draw is keyed by `(seed, sweep, phase, site)` through
//! [`CounterRng`], so a run is reproducible bit for bit regardless of worker
//! count or site visit order.

use rayon::prelude::*;

use std::fmt;

use crate::graph::{DoublingGraph, InteractionGraph};
use crate::hamiltonian::{ModelError, PairConfiguration, SpinConfiguration};
use crate::rng::{CounterRng, Phase};

/// Site loops below this many vertices always run serially; above it they
/// may fan out over the current rayon pool. Output is identical either way.
pub const PARALLEL_SITE_THRESHOLD: usize = 512;

/// Absolute drift tolerated between incrementally tracked energy and a full
/// recomputation before the run aborts.
pub const ENERGY_DRIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsError {
    Model(ModelError),
    NonFiniteField { site: usize },
    NoFreeSites,
    NeedsDoubling,
    EnergyDrift { sweep: u64, tracked: f64, recomputed: f64 },
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::Model(e) => write!(f, "{e}"),
            DynamicsError::NonFiniteField { site } => {
                write!(f, "non-finite local field at site {site}")
            }
            DynamicsError::NoFreeSites => write!(f, "no free sites to update"),
            DynamicsError::NeedsDoubling => {
                write!(f, "this kernel runs on a doubled graph, not a plain graph")
            }
            DynamicsError::EnergyDrift { sweep, tracked, recomputed } => write!(
                f,
                "incremental energy drifted at sweep {sweep}: tracked {tracked}, recomputed {recomputed}"
            ),
        }
    }
}

impl std::error::Error for DynamicsError {}

impl From<ModelError> for DynamicsError {
    fn from(e: ModelError) -> Self {
        DynamicsError::Model(e)
    }
}

/// Heat-bath probability of +1 under local field `h`, `1 / (1 + e^{-2h})`,
/// evaluated on the non-overflowing branch.
pub fn prob_plus(h: f64) -> f64 {
    if h >= 0.0 {
        1.0 / (1.0 + (-2.0 * h).exp())
    } else {
        let e = (2.0 * h).exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy)]
enum FieldSide {
    IntoCopy2,
    FromCopy1,
}

fn half_step_into(
    d: &DoublingGraph,
    src: &[i8],
    dst: &mut [i8],
    rng: &CounterRng,
    sweep: u64,
    phase: Phase,
    side: FieldSide,
    scale: f64,
) -> Result<(), DynamicsError> {
    let update = |x: usize| -> Result<i8, DynamicsError> {
        if let Some(b) = d.parent().frozen_spin(x) {
            return Ok(b);
        }
        let h = match side {
            FieldSide::IntoCopy2 => d.field_into_copy2_scaled(src, x, scale),
            FieldSide::FromCopy1 => d.field_from_copy1_scaled(src, x, scale),
        };
        if !h.is_finite() {
            return Err(DynamicsError::NonFiniteField { site: x });
        }
        let u = rng.uniform(sweep, phase, x as u64);
        Ok(if u < prob_plus(h) { 1 } else { -1 })
    };
    let n = d.vertex_count();
    if n >= PARALLEL_SITE_THRESHOLD && rayon::current_num_threads() > 1 {
        dst.par_iter_mut().enumerate().try_for_each(|(x, slot)| {
            *slot = update(x)?;
            Ok(())
        })
    } else {
        for (x, slot) in dst.iter_mut().enumerate() {
            *slot = update(x)?;
        }
        Ok(())
    }
}

fn half_step(
    d: &DoublingGraph,
    sigma: &SpinConfiguration,
    rng: &CounterRng,
    sweep: u64,
    phase: Phase,
    side: FieldSide,
) -> Result<SpinConfiguration, DynamicsError> {
    sigma.consistent_with(d.parent())?;
    let mut out = vec![0i8; d.vertex_count()];
    half_step_into(d, sigma.spins(), &mut out, rng, sweep, phase, side, 1.0)?;
    Ok(SpinConfiguration::from_raw(out))
}

/// First half-step: every free site resamples in parallel from the field its
/// second copy receives from `sigma` on copy 1. Frozen sites are copied.
pub fn half_step_12(
    d: &DoublingGraph,
    sigma: &SpinConfiguration,
    rng: &CounterRng,
    sweep: u64,
) -> Result<SpinConfiguration, DynamicsError> {
    half_step(d, sigma, rng, sweep, Phase::Forward, FieldSide::IntoCopy2)
}

/// Second half-step: the mirror of [`half_step_12`] with the edge roles
/// swapped, driven by a copy-2 configuration.
pub fn half_step_21(
    d: &DoublingGraph,
    sigma_prime: &SpinConfiguration,
    rng: &CounterRng,
    sweep: u64,
) -> Result<SpinConfiguration, DynamicsError> {
    half_step(d, sigma_prime, rng, sweep, Phase::Backward, FieldSide::FromCopy1)
}

/// One shaken step: forward half-step, then backward half-step, consuming
/// the two phases of the same sweep counter.
pub fn shaken_step(
    d: &DoublingGraph,
    sigma: &SpinConfiguration,
    rng: &CounterRng,
    sweep: u64,
) -> Result<SpinConfiguration, DynamicsError> {
    let mid = half_step_12(d, sigma, rng, sweep)?;
    half_step_21(d, &mid, rng, sweep)
}

/// Composition in the opposite order: backward half-step, then forward.
pub fn reversed_shaken_step(
    d: &DoublingGraph,
    sigma: &SpinConfiguration,
    rng: &CounterRng,
    sweep: u64,
) -> Result<SpinConfiguration, DynamicsError> {
    let mid = half_step_21(d, sigma, rng, sweep)?;
    half_step_12(d, &mid, rng, sweep)
}

/// One step of the lifted pair dynamics: refresh the second copy from the
/// first, then the first from the new second. The incoming second copy is
/// discarded by construction.
pub fn alternate_step(
    d: &DoublingGraph,
    pair: &PairConfiguration,
    rng: &CounterRng,
    sweep: u64,
) -> Result<PairConfiguration, DynamicsError> {
    pair.consistent_with(d)?;
    let new_second = half_step_12(d, &pair.first, rng, sweep)?;
    let new_first = half_step_21(d, &new_second, rng, sweep)?;
    Ok(PairConfiguration {
        first: new_first,
        second: new_second,
    })
}

/// Single-spin-flip baseline on the parent Hamiltonian: pick one free site
/// uniformly, resample it from its conditional
/// `P(+1) = 1 / (1 + e^{-2 (sum_y J_xy s_y + 2 lambda_x)})`.
pub fn heat_bath_step(
    g: &InteractionGraph,
    sigma: &SpinConfiguration,
    rng: &CounterRng,
    step: u64,
) -> Result<SpinConfiguration, DynamicsError> {
    sigma.consistent_with(g)?;
    if g.free_count() == 0 {
        return Err(DynamicsError::NoFreeSites);
    }
    let mut out = sigma.clone();
    heat_bath_update(g, &mut out, rng, step, 1.0);
    Ok(out)
}

// In-place flip attempt; returns (site, unscaled local field, old spin, new
// spin) for incremental bookkeeping.
fn heat_bath_update(
    g: &InteractionGraph,
    sigma: &mut SpinConfiguration,
    rng: &CounterRng,
    step: u64,
    scale: f64,
) -> (usize, f64, i8, i8) {
    let free = g.free_sites();
    let pick = rng.uniform(step, Phase::Baseline, 0);
    let x = free[((pick * free.len() as f64) as usize).min(free.len() - 1)];
    let mut h = 2.0 * g.field(x);
    for &(y, j) in g.neighbors(x) {
        h += j * sigma.spin(y) as f64;
    }
    let p = prob_plus(scale * h);
    let old = sigma.spin(x);
    let new = if rng.uniform(step, Phase::Baseline, 1) < p { 1 } else { -1 };
    sigma.set(x, new);
    (x, h, old, new)
}

/// Deterministic random configuration respecting frozen sites; the initial
/// state of seeded chains.
pub fn random_configuration(g: &InteractionGraph, seed: u64) -> SpinConfiguration {
    let rng = CounterRng::new(seed);
    let spins = (0..g.vertex_count())
        .map(|x| match g.frozen_spin(x) {
            Some(b) => b,
            None => {
                if rng.coin(0, Phase::Init, x as u64) {
                    1
                } else {
                    -1
                }
            }
        })
        .collect();
    SpinConfiguration::from_raw(spins)
}

/// Which chain the run loop iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Shaken,
    ShakenReversed,
    HeatBath,
}

impl KernelChoice {
    pub fn name(self) -> &'static str {
        match self {
            KernelChoice::Shaken => "shaken",
            KernelChoice::ShakenReversed => "shaken-reversed",
            KernelChoice::HeatBath => "heatbath",
        }
    }
}

impl std::str::FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shaken" => Ok(KernelChoice::Shaken),
            "shaken-reversed" => Ok(KernelChoice::ShakenReversed),
            "heatbath" => Ok(KernelChoice::HeatBath),
            other => Err(format!(
                "unknown kernel '{other}' (expected shaken, shaken-reversed or heatbath)"
            )),
        }
    }
}

/// What the chain runs on. The heat-bath kernel accepts either form and uses
/// the parent graph of a doubling.
#[derive(Clone, Copy)]
pub enum ChainTarget<'a> {
    Doubling(&'a DoublingGraph),
    Graph(&'a InteractionGraph),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Sweeps for the parallel kernels; sweep-equivalents (free-site count
    /// many flips each) for the baseline.
    pub sweeps: u64,
    pub seed: u64,
    /// Geometric per-sweep factor applied to couplings and fields, never to
    /// the self-interaction weight. 1 keeps parameters constant.
    pub coupling_ramp: f64,
    /// Full energy recomputation interval guarding incremental tracking.
    pub recompute_every: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            sweeps: 0,
            seed: 0,
            coupling_ramp: 1.0,
            recompute_every: 1024,
        }
    }
}

/// One observer row; written before any sweep (sweep 0) and after each sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub sweep: u64,
    pub energy: f64,
    pub magnetization: f64,
    pub best_energy: f64,
}

/// Final chain state with time averages over the post-initial trace rows.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub current: SpinConfiguration,
    pub sweep: u64,
    pub mean_energy: f64,
    pub mean_abs_magnetization: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: ChainState,
    pub trace: Vec<TraceRow>,
    pub best_energy: f64,
    pub best: SpinConfiguration,
    /// Smallest pair energy among the pair states visited by a parallel
    /// kernel; infinity for the baseline.
    pub min_pair_energy: f64,
    pub attempted_updates: u64,
}

/// Render a trace as CSV with the stable header.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("sweep,energy,magnetization,best_energy\n");
    for row in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.sweep, row.energy, row.magnetization, row.best_energy
        ));
    }
    out
}

/// Drive `kernel` for `opts.sweeps` sweeps from `initial`, recording energy,
/// magnetization and best-so-far each sweep. Deterministic in
/// `(kernel, target, initial, opts)`.
pub fn run(
    kernel: KernelChoice,
    target: ChainTarget<'_>,
    initial: &SpinConfiguration,
    opts: &RunOptions,
) -> Result<RunResult, DynamicsError> {
    match (kernel, target) {
        (KernelChoice::HeatBath, ChainTarget::Graph(g)) => run_heat_bath(g, initial, opts),
        (KernelChoice::HeatBath, ChainTarget::Doubling(d)) => {
            run_heat_bath(d.parent(), initial, opts)
        }
        (_, ChainTarget::Graph(_)) => Err(DynamicsError::NeedsDoubling),
        (choice, ChainTarget::Doubling(d)) => {
            run_shaken(d, choice == KernelChoice::ShakenReversed, initial, opts)
        }
    }
}

fn finish(
    trace: Vec<TraceRow>,
    current: SpinConfiguration,
    best_energy: f64,
    best: SpinConfiguration,
    min_pair_energy: f64,
    attempted_updates: u64,
) -> RunResult {
    let tail = if trace.len() > 1 { &trace[1..] } else { &trace[..] };
    let mean_energy = tail.iter().map(|r| r.energy).sum::<f64>() / tail.len() as f64;
    let mean_abs_magnetization =
        tail.iter().map(|r| r.magnetization.abs()).sum::<f64>() / tail.len() as f64;
    RunResult {
        state: ChainState {
            current,
            sweep: trace.last().map(|r| r.sweep).unwrap_or(0),
            mean_energy,
            mean_abs_magnetization,
        },
        trace,
        best_energy,
        best,
        min_pair_energy,
        attempted_updates,
    }
}

fn run_shaken(
    d: &DoublingGraph,
    reversed: bool,
    initial: &SpinConfiguration,
    opts: &RunOptions,
) -> Result<RunResult, DynamicsError> {
    initial.consistent_with(d.parent())?;
    let g = d.parent();
    let rng = CounterRng::new(opts.seed);
    let n = d.vertex_count();

    let mut current = initial.spins().to_vec();
    let mut mid = vec![0i8; n];
    let mut next = vec![0i8; n];

    let mut energy = g.energy_unchecked(&current);
    let mut best_energy = energy;
    let mut best = initial.clone();
    let mut min_pair_energy = f64::INFINITY;
    let mut trace = Vec::with_capacity(opts.sweeps as usize + 1);
    trace.push(TraceRow {
        sweep: 0,
        energy,
        magnetization: initial.magnetization(),
        best_energy,
    });

    for sweep in 1..=opts.sweeps {
        let scale = if opts.coupling_ramp == 1.0 {
            1.0
        } else {
            opts.coupling_ramp.powf((sweep - 1) as f64)
        };
        let (first_phase, first_side, second_phase, second_side) = if reversed {
            (Phase::Backward, FieldSide::FromCopy1, Phase::Forward, FieldSide::IntoCopy2)
        } else {
            (Phase::Forward, FieldSide::IntoCopy2, Phase::Backward, FieldSide::FromCopy1)
        };
        half_step_into(d, &current, &mut mid, &rng, sweep, first_phase, first_side, scale)?;
        // pair visited after the first half-step: forward keeps `current` on
        // copy 1, reversed keeps it on copy 2
        min_pair_energy = min_pair_energy.min(if reversed {
            d.pair_energy_unchecked(&mid, &current)
        } else {
            d.pair_energy_unchecked(&current, &mid)
        });
        half_step_into(d, &mid, &mut next, &rng, sweep, second_phase, second_side, scale)?;
        min_pair_energy = min_pair_energy.min(if reversed {
            d.pair_energy_unchecked(&mid, &next)
        } else {
            d.pair_energy_unchecked(&next, &mid)
        });
        std::mem::swap(&mut current, &mut next);

        energy = g.energy_unchecked(&current);
        let magnetization =
            current.iter().map(|&s| s as f64).sum::<f64>() / n.max(1) as f64;
        if energy < best_energy {
            best_energy = energy;
            best = SpinConfiguration::from_raw(current.clone());
        }
        trace.push(TraceRow {
            sweep,
            energy,
            magnetization,
            best_energy,
        });
    }

    let attempted = 2 * n as u64 * opts.sweeps;
    Ok(finish(
        trace,
        SpinConfiguration::from_raw(current),
        best_energy,
        best,
        min_pair_energy,
        attempted,
    ))
}

fn run_heat_bath(
    g: &InteractionGraph,
    initial: &SpinConfiguration,
    opts: &RunOptions,
) -> Result<RunResult, DynamicsError> {
    initial.consistent_with(g)?;
    if g.free_count() == 0 && opts.sweeps > 0 {
        return Err(DynamicsError::NoFreeSites);
    }
    let rng = CounterRng::new(opts.seed);
    let free = g.free_count() as u64;
    let n = g.vertex_count();

    let mut current = initial.clone();
    let mut energy = g.energy_unchecked(current.spins());
    let mut magnetization_sum: i64 = current.spins().iter().map(|&s| s as i64).sum();
    let mut best_energy = energy;
    let mut best = current.clone();
    let mut trace = Vec::with_capacity(opts.sweeps as usize + 1);
    trace.push(TraceRow {
        sweep: 0,
        energy,
        magnetization: magnetization_sum as f64 / n.max(1) as f64,
        best_energy,
    });

    for sweep in 1..=opts.sweeps {
        let scale = if opts.coupling_ramp == 1.0 {
            1.0
        } else {
            opts.coupling_ramp.powf((sweep - 1) as f64)
        };
        for k in 0..free {
            let step = (sweep - 1) * free + k;
            let (_, h, old, new) = heat_bath_update(g, &mut current, &rng, step, scale);
            if old != new {
                // flipping s -> -s changes H by (old - new) * h = 2 old h
                energy += (old - new) as f64 * h;
                magnetization_sum += (new - old) as i64;
                if energy < best_energy {
                    best_energy = energy;
                    best = current.clone();
                }
            }
        }
        trace.push(TraceRow {
            sweep,
            energy,
            magnetization: magnetization_sum as f64 / n.max(1) as f64,
            best_energy,
        });
        if sweep % opts.recompute_every == 0 {
            let recomputed = g.energy_unchecked(current.spins());
            if (recomputed - energy).abs() > ENERGY_DRIFT_TOLERANCE {
                return Err(DynamicsError::EnergyDrift {
                    sweep,
                    tracked: energy,
                    recomputed,
                });
            }
            energy = recomputed;
        }
    }

    // best-so-far is sampled per sweep-equivalent, so recompute its energy
    let best_energy_exact = g.energy_unchecked(best.spins());
    debug_assert!((best_energy_exact - best_energy).abs() <= ENERGY_DRIFT_TOLERANCE);
    let attempted = free * opts.sweeps;
    Ok(finish(trace, current, best_energy_exact, best, f64::INFINITY, attempted))
}
