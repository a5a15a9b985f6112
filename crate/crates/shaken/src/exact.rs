//! Exact enumeration on small systems: explicit distributions, transition
//! matrices, stationarity / reversibility / marginal checks, the closed-form
//! weight identity and exhaustive minimization.
//!
//! Configuration indexing is little-endian over the free sites in increasing
//! vertex order: bit `i` of an index holds the spin of the `i`-th free site,
//! with a set bit meaning +1. Pair states use `index = first + second * count`,
//! first copy in the low bits. Every trace and pinned test value uses this
//! encoding.

use std::fmt;

use crate::graph::{orient, DoublingGraph, GraphError, InteractionGraph, OrientStrategy};
use crate::hamiltonian::{PairConfiguration, SpinConfiguration};
use crate::lattice::{z2_doubling, LatticeError, TorusLattice};
use crate::rng::{CounterRng, Phase};

/// Hard cap on enumerated kernel state counts (2^14 states).
pub const MAX_KERNEL_FREE_SPINS: usize = 14;
/// Caps for exhaustive minimization.
pub const MAX_MIN_FREE_SPINS: usize = 24;
pub const MAX_PAIR_MIN_FREE_SPINS: usize = 12;
/// Reported minimizers are truncated to this many; the tie count is exact.
pub const MAX_REPORTED_TIES: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum ExactError {
    StateCapExceeded { free: usize, cap: usize },
    NotNormalized { sum: f64 },
    NotStochastic { row: usize, sum: f64 },
    NegativeEntry { index: usize, value: f64 },
    DimensionMismatch { left: usize, right: usize },
    Graph(GraphError),
    Lattice(LatticeError),
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::StateCapExceeded { free, cap } => {
                write!(f, "{free} free spins exceed the enumeration cap of {cap}")
            }
            ExactError::NotNormalized { sum } => {
                write!(f, "probabilities sum to {sum}, not 1")
            }
            ExactError::NotStochastic { row, sum } => {
                write!(f, "kernel row {row} sums to {sum}, not 1")
            }
            ExactError::NegativeEntry { index, value } => {
                write!(f, "negative probability {value} at index {index}")
            }
            ExactError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            ExactError::Graph(e) => write!(f, "{e}"),
            ExactError::Lattice(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ExactError {}

impl From<GraphError> for ExactError {
    fn from(e: GraphError) -> Self {
        ExactError::Graph(e)
    }
}

impl From<LatticeError> for ExactError {
    fn from(e: LatticeError) -> Self {
        ExactError::Lattice(e)
    }
}

// Compensated accumulator for the tight residual budgets.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let mut acc = Kahan::default();
    for v in values {
        acc.add((v - m).exp());
    }
    m + acc.value().ln()
}

/// Enumeration of the free-spin configurations of a graph.
#[derive(Debug, Clone)]
pub struct StateSpace {
    template: Vec<i8>,
    free: Vec<usize>,
}

impl StateSpace {
    pub fn for_graph(graph: &InteractionGraph) -> Self {
        let template = (0..graph.vertex_count())
            .map(|x| graph.frozen_spin(x).unwrap_or(1))
            .collect();
        StateSpace {
            template,
            free: graph.free_sites().to_vec(),
        }
    }

    pub fn free_len(&self) -> usize {
        self.free.len()
    }

    /// Number of enumerated configurations, `2^free`.
    ///
    /// # Panics
    ///
    /// Beyond 30 free sites; the probability vectors alone stop fitting.
    pub fn count(&self) -> usize {
        assert!(self.free.len() <= 30, "state space too large to enumerate");
        1usize << self.free.len()
    }

    /// Configuration for an index under the documented bit encoding.
    pub fn config(&self, index: usize) -> SpinConfiguration {
        debug_assert!(index < self.count());
        let mut spins = self.template.clone();
        for (i, &x) in self.free.iter().enumerate() {
            spins[x] = if index >> i & 1 == 1 { 1 } else { -1 };
        }
        SpinConfiguration::from_raw(spins)
    }

    pub fn index_of(&self, sigma: &SpinConfiguration) -> usize {
        let mut index = 0;
        for (i, &x) in self.free.iter().enumerate() {
            if sigma.spin(x) == 1 {
                index |= 1 << i;
            }
        }
        index
    }
}

/// Explicit probability vector over an enumerated state space.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    probs: Vec<f64>,
}

impl ExactDistribution {
    /// Entries must be nonnegative and sum to 1 within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self, ExactError> {
        let mut sum = Kahan::default();
        for (index, &p) in probs.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(ExactError::NegativeEntry { index, value: p });
            }
            sum.add(p);
        }
        let total = sum.value();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ExactError::NotNormalized { sum: total });
        }
        Ok(ExactDistribution { probs })
    }

    /// Normalize `exp(log_w)` safely through a log-sum-exp shift.
    pub fn from_log_weights(log_weights: &[f64]) -> Self {
        let lse = log_sum_exp(log_weights.iter().copied());
        let probs = log_weights.iter().map(|&w| (w - lse).exp()).collect();
        ExactDistribution { probs }
    }

    pub fn uniform(states: usize) -> Self {
        ExactDistribution {
            probs: vec![1.0 / states as f64; states],
        }
    }

    pub fn point_mass(states: usize, at: usize) -> Self {
        let mut probs = vec![0.0; states];
        probs[at] = 1.0;
        ExactDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expectation of `f` over the distribution.
    pub fn expect(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let mut acc = Kahan::default();
        for (i, &p) in self.probs.iter().enumerate() {
            acc.add(p * f(i));
        }
        acc.value()
    }
}

/// Half the L1 distance between two distributions on the same support.
pub fn tv_distance(mu: &ExactDistribution, nu: &ExactDistribution) -> f64 {
    assert_eq!(mu.len(), nu.len(), "distributions on different supports");
    let mut acc = Kahan::default();
    for (a, b) in mu.probs.iter().zip(&nu.probs) {
        acc.add((a - b).abs());
    }
    0.5 * acc.value()
}

/// Row-stochastic transition matrix over an enumerated state space.
#[derive(Debug, Clone)]
pub struct ExactKernel {
    states: usize,
    data: Vec<f64>,
}

impl ExactKernel {
    /// Rows must be nonnegative and sum to 1 within 1e-12.
    pub fn from_rows(states: usize, data: Vec<f64>) -> Result<Self, ExactError> {
        assert_eq!(data.len(), states * states);
        for row in 0..states {
            let mut sum = Kahan::default();
            for col in 0..states {
                let p = data[row * states + col];
                if p < 0.0 || !p.is_finite() {
                    return Err(ExactError::NegativeEntry {
                        index: row * states + col,
                        value: p,
                    });
                }
                sum.add(p);
            }
            let total = sum.value();
            if (total - 1.0).abs() > 1e-12 {
                return Err(ExactError::NotStochastic { row, sum: total });
            }
        }
        Ok(ExactKernel { states, data })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.states + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.states..(from + 1) * self.states]
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &ExactKernel) -> Result<ExactKernel, ExactError> {
        if self.states != other.states {
            return Err(ExactError::DimensionMismatch {
                left: self.states,
                right: other.states,
            });
        }
        let n = self.states;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Kahan::default();
                for k in 0..n {
                    acc.add(self.data[i * n + k] * other.data[k * n + j]);
                }
                data[i * n + j] = acc.value();
            }
        }
        ExactKernel::from_rows(n, data)
    }

    /// Worst row-sum deviation from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.states)
            .map(|i| {
                let mut acc = Kahan::default();
                for j in 0..self.states {
                    acc.add(self.entry(i, j));
                }
                (acc.value() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// One step of the chain applied to a distribution (left action).
    pub fn propagate(&self, dist: &ExactDistribution) -> ExactDistribution {
        assert_eq!(dist.len(), self.states);
        let mut out = vec![0.0; self.states];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = Kahan::default();
            for i in 0..self.states {
                acc.add(dist.prob(i) * self.entry(i, j));
            }
            *slot = acc.value();
        }
        // renormalize away accumulated rounding
        let total: f64 = out.iter().sum();
        for p in &mut out {
            *p /= total;
        }
        ExactDistribution { probs: out }
    }
}

/// Which enumerated kernel to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelId {
    /// First half-step, copy 1 driving copy 2.
    HalfForward,
    /// Second half-step, copy 2 driving copy 1.
    HalfBackward,
    /// Composition forward-then-backward.
    Shaken,
    /// Composition backward-then-forward.
    ShakenReversed,
    /// Lifted pair dynamics over pair states. Built straight from pair
    /// energies and their normalizers, independently of the product-form
    /// site probabilities the other kernels use.
    Alternate,
}

fn check_kernel_cap(free: usize, pair: bool) -> Result<(), ExactError> {
    let effective = if pair { 2 * free } else { free };
    if effective > MAX_KERNEL_FREE_SPINS {
        return Err(ExactError::StateCapExceeded {
            free: effective,
            cap: MAX_KERNEL_FREE_SPINS,
        });
    }
    Ok(())
}

// Product-form half-step matrix. For every source configuration the sites
// are independent: P(target) = prod_x p_x(target_x), with p_x the heat-bath
// probability under the source's local field.
fn half_step_matrix(d: &DoublingGraph, space: &StateSpace, forward: bool) -> ExactKernel {
    let n = space.count();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let src = space.config(i);
        let p_plus: Vec<f64> = space
            .free
            .iter()
            .map(|&x| {
                let h = if forward {
                    d.field_into_copy2_scaled(src.spins(), x, 1.0)
                } else {
                    d.field_from_copy1_scaled(src.spins(), x, 1.0)
                };
                crate::dynamics::prob_plus(h)
            })
            .collect();
        for j in 0..n {
            let mut p = 1.0;
            for (bit, &pp) in p_plus.iter().enumerate() {
                p *= if j >> bit & 1 == 1 { pp } else { 1.0 - pp };
            }
            data[i * n + j] = p;
        }
    }
    ExactKernel::from_rows(n, data).expect("product rows are stochastic")
}

// Energy-route conditional matrices: row-normalized exp(-H(a, b)) over the
// second argument (forward) or the first (backward).
fn energy_route_conditionals(
    d: &DoublingGraph,
    space: &StateSpace,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = space.count();
    let configs: Vec<SpinConfiguration> = (0..n).map(|i| space.config(i)).collect();
    let mut neg_energy = vec![vec![0.0; n]; n];
    for (i, a) in configs.iter().enumerate() {
        for (j, b) in configs.iter().enumerate() {
            neg_energy[i][j] = -d.pair_energy_unchecked(a.spins(), b.spins());
        }
    }
    let forward: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let lse = log_sum_exp(neg_energy[i].iter().copied());
            (0..n).map(|j| (neg_energy[i][j] - lse).exp()).collect()
        })
        .collect();
    let backward: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let lse = log_sum_exp((0..n).map(|i| neg_energy[i][j]));
            (0..n).map(|i| (neg_energy[i][j] - lse).exp()).collect()
        })
        .collect();
    (forward, backward)
}

/// Build the requested kernel as an explicit matrix. Pair kernels index
/// states as `first + second * count`.
pub fn exact_kernel(d: &DoublingGraph, which: KernelId) -> Result<ExactKernel, ExactError> {
    let space = StateSpace::for_graph(d.parent());
    check_kernel_cap(space.free_len(), which == KernelId::Alternate)?;
    match which {
        KernelId::HalfForward => Ok(half_step_matrix(d, &space, true)),
        KernelId::HalfBackward => Ok(half_step_matrix(d, &space, false)),
        KernelId::Shaken => {
            half_step_matrix(d, &space, true).matmul(&half_step_matrix(d, &space, false))
        }
        KernelId::ShakenReversed => {
            half_step_matrix(d, &space, false).matmul(&half_step_matrix(d, &space, true))
        }
        KernelId::Alternate => {
            let n = space.count();
            let (fwd, bwd) = energy_route_conditionals(d, &space);
            let pair_states = n * n;
            let mut data = vec![0.0; pair_states * pair_states];
            for s1 in 0..n {
                for s2 in 0..n {
                    let row = s1 + s2 * n;
                    for t1 in 0..n {
                        for t2 in 0..n {
                            // second copy refreshed from s1, then first copy
                            // from the new second copy; s2 is discarded
                            data[row * pair_states + (t1 + t2 * n)] =
                                fwd[s1][t2] * bwd[t2][t1];
                        }
                    }
                }
            }
            ExactKernel::from_rows(pair_states, data)
        }
    }
}

/// Single-spin-flip heat-bath kernel on the parent Hamiltonian: pick a free
/// site uniformly, resample it from its conditional.
pub fn exact_heat_bath_kernel(g: &InteractionGraph) -> Result<ExactKernel, ExactError> {
    let space = StateSpace::for_graph(g);
    check_kernel_cap(space.free_len(), false)?;
    let n = space.count();
    let f = space.free_len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let src = space.config(i);
        let mut stay = 0.0;
        for (bit, &x) in space.free.iter().enumerate() {
            let mut h = 2.0 * g.field(x);
            for &(y, j) in g.neighbors(x) {
                h += j * src.spin(y) as f64;
            }
            let p_plus = crate::dynamics::prob_plus(h);
            let p_new = [1.0 - p_plus, p_plus]; // [to -1, to +1]
            let flipped = i ^ (1 << bit);
            let now_plus = i >> bit & 1 == 1;
            stay += p_new[now_plus as usize] / f as f64;
            data[i * n + flipped] = p_new[!now_plus as usize] / f as f64;
        }
        data[i * n + i] = stay;
    }
    ExactKernel::from_rows(n, data)
}

/// Stationary measure of the forward composition: probability proportional
/// to the weight `Z_sigma`.
pub fn shaken_stationary(d: &DoublingGraph) -> ExactDistribution {
    let space = StateSpace::for_graph(d.parent());
    let log_w: Vec<f64> = (0..space.count())
        .map(|i| d.log_stationary_weight(&space.config(i)))
        .collect();
    ExactDistribution::from_log_weights(&log_w)
}

/// Stationary measure of the reversed composition, proportional to the
/// mirror weight.
pub fn reversed_stationary(d: &DoublingGraph) -> ExactDistribution {
    let space = StateSpace::for_graph(d.parent());
    let log_w: Vec<f64> = (0..space.count())
        .map(|i| d.log_stationary_weight_reversed(&space.config(i)))
        .collect();
    ExactDistribution::from_log_weights(&log_w)
}

/// Gibbs measure of the parent Hamiltonian.
pub fn gibbs(g: &InteractionGraph) -> ExactDistribution {
    let space = StateSpace::for_graph(g);
    let log_w: Vec<f64> = (0..space.count())
        .map(|i| -g.energy_unchecked(space.config(i).spins()))
        .collect();
    ExactDistribution::from_log_weights(&log_w)
}

/// Gibbs measure of the pair Hamiltonian over pair states.
pub fn pair_gibbs(d: &DoublingGraph) -> ExactDistribution {
    let space = StateSpace::for_graph(d.parent());
    let n = space.count();
    let configs: Vec<SpinConfiguration> = (0..n).map(|i| space.config(i)).collect();
    let mut log_w = vec![0.0; n * n];
    for s1 in 0..n {
        for s2 in 0..n {
            log_w[s1 + s2 * n] =
                -d.pair_energy_unchecked(configs[s1].spins(), configs[s2].spins());
        }
    }
    ExactDistribution::from_log_weights(&log_w)
}

/// Left principal eigenvector by power iteration; independent oracle for
/// stationary measures.
pub fn power_stationary(p: &ExactKernel, max_iters: usize, tol: f64) -> ExactDistribution {
    let mut dist = ExactDistribution::uniform(p.states());
    for _ in 0..max_iters {
        let next = p.propagate(&dist);
        let gap = tv_distance(&next, &dist);
        dist = next;
        if gap < tol {
            break;
        }
    }
    dist
}

/// `max_t | sum_s pi(s) P(s, t) - pi(t) |`.
pub fn stationary_check(p: &ExactKernel, pi: &ExactDistribution) -> f64 {
    assert_eq!(p.states(), pi.len());
    let mut worst = 0.0f64;
    for t in 0..p.states() {
        let mut acc = Kahan::default();
        for s in 0..p.states() {
            acc.add(pi.prob(s) * p.entry(s, t));
        }
        worst = worst.max((acc.value() - pi.prob(t)).abs());
    }
    worst
}

/// Largest detailed-balance violation `|pi(s)P(s,t) - pi(t)P(t,s)|` and the
/// pair attaining it.
pub fn detailed_balance_check(p: &ExactKernel, pi: &ExactDistribution) -> (f64, (usize, usize)) {
    assert_eq!(p.states(), pi.len());
    let mut worst = 0.0f64;
    let mut at = (0, 0);
    for s in 0..p.states() {
        for t in (s + 1)..p.states() {
            let gap = (pi.prob(s) * p.entry(s, t) - pi.prob(t) * p.entry(t, s)).abs();
            if gap > worst {
                worst = gap;
                at = (s, t);
            }
        }
    }
    (worst, at)
}

/// Check that summing the lifted kernel over the final second copy
/// reproduces the one-copy composition, for every initial second copy:
/// returns the largest discrepancy over `(s1, s2, t1)`.
pub fn marginal_identity_check(d: &DoublingGraph) -> Result<f64, ExactError> {
    let space = StateSpace::for_graph(d.parent());
    check_kernel_cap(space.free_len(), true)?;
    let n = space.count();
    let shaken = exact_kernel(d, KernelId::Shaken)?;
    let alternate = exact_kernel(d, KernelId::Alternate)?;
    let mut worst = 0.0f64;
    for s1 in 0..n {
        for s2 in 0..n {
            let row = s1 + s2 * n;
            for t1 in 0..n {
                let mut acc = Kahan::default();
                for t2 in 0..n {
                    acc.add(alternate.entry(row, t1 + t2 * n));
                }
                worst = worst.max((acc.value() - shaken.entry(s1, t1)).abs());
            }
        }
    }
    Ok(worst)
}

/// Compare the closed-form product formula for the stationary weight on an
/// `l x l` periodic torus against the cosh form, returning the worst
/// relative error on the log scale. Enumerates every configuration up to 14
/// spins, otherwise checks `samples` seeded random configurations.
pub fn unpacked_weight_check(
    l: usize,
    coupling: f64,
    q: f64,
    lambda: f64,
    samples: usize,
) -> Result<f64, ExactError> {
    let d = z2_doubling(l, coupling, q, lambda, &[])?;
    let torus = TorusLattice::new(l)?;
    let sites = l * l;
    let delta = (-2.0 * q).exp();

    let product_form_log = |sigma: &SpinConfiguration| -> f64 {
        let mut log_w = q * sites as f64 - d.parent().energy_unchecked(sigma.spins());
        for x in 0..sites {
            let g_x = coupling
                * (sigma.spin(torus.down(x)) as f64 + sigma.spin(torus.left(x)) as f64);
            let s_x = sigma.spin(x) as f64;
            log_w += (delta * (-2.0 * g_x * s_x - 2.0 * lambda * s_x).exp()).ln_1p();
        }
        log_w
    };

    let space = StateSpace::for_graph(d.parent());
    let mut worst = 0.0f64;
    let mut check = |sigma: &SpinConfiguration| {
        let cosh_form = d.log_stationary_weight(sigma);
        let product_form = product_form_log(sigma);
        let scale = cosh_form.abs().max(1.0);
        worst = worst.max((cosh_form - product_form).abs() / scale);
    };

    if sites <= MAX_KERNEL_FREE_SPINS {
        for i in 0..space.count() {
            check(&space.config(i));
        }
    } else {
        let samples = if samples == 0 { 256 } else { samples };
        let rng = CounterRng::new(0x5eed);
        for k in 0..samples as u64 {
            let spins: Vec<i8> = (0..sites)
                .map(|x| if rng.coin(k, Phase::Instance, x as u64) { 1 } else { -1 })
                .collect();
            check(&SpinConfiguration::from_raw(spins));
        }
    }
    Ok(worst)
}

/// Exhaustive minimum of the parent Hamiltonian.
#[derive(Debug, Clone)]
pub struct MinimumResult {
    pub min_energy: f64,
    /// Minimizers, truncated to [`MAX_REPORTED_TIES`].
    pub minimizers: Vec<SpinConfiguration>,
    /// Exact number of minimizers.
    pub tie_count: usize,
}

pub fn brute_force_min(g: &InteractionGraph) -> Result<MinimumResult, ExactError> {
    let space = StateSpace::for_graph(g);
    if space.free_len() > MAX_MIN_FREE_SPINS {
        return Err(ExactError::StateCapExceeded {
            free: space.free_len(),
            cap: MAX_MIN_FREE_SPINS,
        });
    }
    let mut min_energy = f64::INFINITY;
    let mut minimizers = Vec::new();
    let mut tie_count = 0usize;
    for i in 0..space.count() {
        let sigma = space.config(i);
        let e = g.energy_unchecked(sigma.spins());
        if e < min_energy {
            min_energy = e;
            minimizers.clear();
            minimizers.push(sigma);
            tie_count = 1;
        } else if e == min_energy {
            tie_count += 1;
            if minimizers.len() < MAX_REPORTED_TIES {
                minimizers.push(sigma);
            }
        }
    }
    Ok(MinimumResult {
        min_energy,
        minimizers,
        tie_count,
    })
}

/// Exhaustive minimum of the pair Hamiltonian over pair configurations.
#[derive(Debug, Clone)]
pub struct PairMinimumResult {
    pub min_energy: f64,
    /// Minimizing pairs, truncated to [`MAX_REPORTED_TIES`].
    pub minimizers: Vec<PairConfiguration>,
    pub tie_count: usize,
    /// Some minimizer has both copies equal.
    pub has_diagonal_minimizer: bool,
}

/// Enumerates the first copy; for each, the second copy decouples site by
/// site, so its minimum is taken in closed form. The self-interaction weight
/// enters every total through a single `q * count` product, which keeps the
/// comparison against `min H - q|V|` exact for integer couplings and fields.
pub fn brute_force_min_pair(d: &DoublingGraph) -> Result<PairMinimumResult, ExactError> {
    let space = StateSpace::for_graph(d.parent());
    if space.free_len() > MAX_PAIR_MIN_FREE_SPINS {
        return Err(ExactError::StateCapExceeded {
            free: space.free_len(),
            cap: MAX_PAIR_MIN_FREE_SPINS,
        });
    }
    let n = d.vertex_count();
    let parent = d.parent();
    let mut min_energy = f64::INFINITY;
    let mut minimizers: Vec<PairConfiguration> = Vec::new();
    let mut tie_count = 0usize;
    let mut has_diagonal = false;

    for i in 0..space.count() {
        let sigma = space.config(i);
        // a_x: coupling-plus-field part of the local field on x's second copy
        let a: Vec<f64> = (0..n)
            .map(|x| {
                let mut v = parent.field(x);
                for &(y, j) in d.edges_into_copy2(x) {
                    v += j * sigma.spin(y) as f64;
                }
                v
            })
            .collect();
        // best spin-aligned contribution per site; q kept out of the sum
        let mut base = Kahan::default();
        let mut q_count = 0i64;
        // choices[x]: +1 take tau_x = sigma_x, -1 take the flip, 0 tie (free
        // sites only)
        let mut choices = vec![0i8; n];
        for x in 0..n {
            base.add(parent.field(x) * sigma.spin(x) as f64); // lambda sigma term
            match parent.frozen_spin(x) {
                Some(b) => {
                    base.add(b as f64 * a[x]);
                    if d.has_self_edge(x) {
                        q_count += (b * sigma.spin(x)) as i64;
                    }
                    choices[x] = if b == sigma.spin(x) { 1 } else { -1 };
                }
                None => {
                    let aligned = sigma.spin(x) as f64 * a[x];
                    let has_q = d.has_self_edge(x);
                    // aligned branch gains +q, flipped branch loses it
                    let take_aligned = if has_q {
                        2.0 * aligned + 2.0 * d.q()
                    } else {
                        2.0 * aligned
                    };
                    if take_aligned > 0.0 {
                        base.add(aligned);
                        if has_q {
                            q_count += 1;
                        }
                        choices[x] = 1;
                    } else if take_aligned < 0.0 {
                        base.add(-aligned);
                        if has_q {
                            q_count -= 1;
                        }
                        choices[x] = -1;
                    } else {
                        base.add(aligned); // tie: both branches equal
                        if has_q {
                            q_count += 1;
                        }
                        choices[x] = 0;
                    }
                }
            }
        }
        let energy = -(base.value() + d.q() * q_count as f64);

        if energy <= min_energy {
            if energy < min_energy {
                min_energy = energy;
                minimizers.clear();
                tie_count = 0;
                has_diagonal = false;
            }
            // expand tie choices into explicit second copies
            let tie_sites: Vec<usize> =
                (0..n).filter(|&x| choices[x] == 0).collect();
            let variants = 1usize << tie_sites.len();
            tie_count += variants;
            for v in 0..variants {
                let mut tau = sigma.clone();
                for x in 0..n {
                    match choices[x] {
                        1 => {}
                        -1 => tau.set(x, -sigma.spin(x)),
                        _ => {}
                    }
                }
                for (bit, &x) in tie_sites.iter().enumerate() {
                    if v >> bit & 1 == 1 {
                        tau.set(x, -sigma.spin(x));
                    }
                }
                if tau == sigma {
                    has_diagonal = true;
                }
                if minimizers.len() < MAX_REPORTED_TIES {
                    minimizers.push(PairConfiguration {
                        first: sigma.clone(),
                        second: tau,
                    });
                }
            }
        }
    }
    Ok(PairMinimumResult {
        min_energy,
        minimizers,
        tie_count,
        has_diagonal_minimizer: has_diagonal,
    })
}

/// Outcome of comparing the exhaustive pair minimum against
/// `min H(sigma) - q |V|`.
#[derive(Debug, Clone)]
pub struct MinIdentityReport {
    pub q: f64,
    pub threshold: f64,
    pub min_single: f64,
    pub min_pair: f64,
    /// `|min_pair - (min_single - q |V|)|`.
    pub discrepancy: f64,
    pub identity_holds: bool,
    /// A strictly non-diagonal minimizing pair, when one exists.
    pub nondiagonal_witness: Option<PairConfiguration>,
}

/// Evaluate the minimum identity on a doubling; reports rather than asserts,
/// since below the threshold the identity may genuinely fail.
pub fn min_identity_check(d: &DoublingGraph, tol: f64) -> Result<MinIdentityReport, ExactError> {
    let single = brute_force_min(d.parent())?;
    let pair = brute_force_min_pair(d)?;
    let n = d.vertex_count() as f64;
    let expected = single.min_energy - d.q() * n;
    let discrepancy = (pair.min_energy - expected).abs();
    let nondiagonal = pair
        .minimizers
        .iter()
        .find(|p| p.first != p.second)
        .cloned();
    Ok(MinIdentityReport {
        q: d.q(),
        threshold: crate::optimize::q_threshold_doubling(d),
        min_single: single.min_energy,
        min_pair: pair.min_energy,
        discrepancy,
        identity_holds: discrepancy <= tol,
        nondiagonal_witness: nondiagonal,
    })
}

// ---------------------------------------------------------------------------
// seeded random instances

struct SeqDraw {
    rng: CounterRng,
    counter: u64,
}

impl SeqDraw {
    fn new(seed: u64) -> Self {
        SeqDraw {
            rng: CounterRng::new(seed),
            counter: 0,
        }
    }

    fn uniform(&mut self) -> f64 {
        self.counter += 1;
        self.rng.uniform(self.counter, Phase::Instance, 0)
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Seeded random graph: `min_n..=max_n` vertices, each pair an edge with
/// probability 0.55. Real couplings in `[-2, 2]`, fields in `[-1, 1]`;
/// `integer_weights` snaps both to integers. With `allow_frozen`, vertices
/// freeze with probability 0.25, always keeping at least two free.
pub fn random_graph(
    seed: u64,
    min_n: usize,
    max_n: usize,
    allow_frozen: bool,
    integer_weights: bool,
) -> InteractionGraph {
    let mut draw = SeqDraw::new(seed);
    let n = min_n + draw.below(max_n - min_n + 1);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if draw.uniform() < 0.55 {
                let j = if integer_weights {
                    let v = [-2.0, -1.0, 1.0, 2.0];
                    v[draw.below(4)]
                } else {
                    draw.range(-2.0, 2.0)
                };
                edges.push((u, v, j));
            }
        }
    }
    let fields: Vec<f64> = (0..n)
        .map(|_| {
            if integer_weights {
                let v = [-1.0, 0.0, 1.0];
                v[draw.below(3)]
            } else {
                draw.range(-1.0, 1.0)
            }
        })
        .collect();
    let mut frozen = Vec::new();
    if allow_frozen {
        for x in 0..n {
            if n - frozen.len() > 2 && draw.uniform() < 0.25 {
                let spin = if draw.uniform() < 0.5 { 1 } else { -1 };
                frozen.push((x, spin));
            }
        }
    }
    InteractionGraph::new(fields, &edges, &frozen).expect("generated graph is valid")
}

/// Seeded random doubling with at most four free vertices, a seeded
/// orientation and `q` uniform in `[0, 3]`.
pub fn random_doubling(seed: u64) -> DoublingGraph {
    let g = random_graph(seed, 2, 4, true, false);
    let o = orient(&g, OrientStrategy::Seeded(seed ^ 0xa5a5_a5a5));
    let mut draw = SeqDraw::new(seed ^ 0x000f_f1ce);
    let q = draw.range(0.0, 3.0);
    crate::graph::build_doubling(g, &o, q).expect("orientation covers the graph")
}

// ---------------------------------------------------------------------------
// verification suite

/// Residual budgets for [`run_verification`]. `witness_floor` is a lower
/// bound: the non-reversibility witness must exceed it.
#[derive(Debug, Clone)]
pub struct VerifyBudgets {
    pub stationarity: f64,
    pub reversibility: f64,
    pub marginal_identity: f64,
    pub alternate_stationarity: f64,
    pub witness_floor: f64,
    pub unpacked_weight: f64,
    pub minimum_identity: f64,
}

impl Default for VerifyBudgets {
    fn default() -> Self {
        VerifyBudgets {
            stationarity: 1e-12,
            reversibility: 1e-13,
            marginal_identity: 1e-13,
            alternate_stationarity: 1e-12,
            witness_floor: 1e-6,
            unpacked_weight: 1e-12,
            minimum_identity: 1e-9,
        }
    }
}

/// One verification check: `value` compared against `budget` with `cmp`
/// (`"<="` for residuals, `">"` for the witness floor).
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub budget: f64,
    pub cmp: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Machine-readable `key value` lines.
    pub fn summary_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {:e}\n", c.name, c.value));
            out.push_str(&format!("{}_budget {:e}\n", c.name, c.budget));
            out.push_str(&format!("{}_pass {}\n", c.name, c.pass));
        }
        out.push_str(&format!("all_pass {}\n", self.all_pass()));
        out
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {}: {:.3e} (budget {} {:.0e}) {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.cmp,
                c.budget,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Number of seeded instances driven through each distributional check.
pub const VERIFY_INSTANCES: u64 = 25;

/// Run the full small-system suite: stationarity and reversibility of the
/// composed kernel, the lifted-marginal identity, stationarity plus the
/// non-reversibility witness of the lifted kernel, the closed-form weight
/// identity and the minimum identity.
pub fn run_verification(seed: u64, budgets: &VerifyBudgets) -> VerificationReport {
    let mut checks = Vec::new();

    let mut worst_stat = 0.0f64;
    let mut worst_db = 0.0f64;
    let mut worst_marginal = 0.0f64;
    let mut worst_alt_stat = 0.0f64;
    for i in 0..VERIFY_INSTANCES {
        let d = random_doubling(seed.wrapping_mul(0x1000).wrapping_add(i));
        let pi = shaken_stationary(&d);
        let shaken = exact_kernel(&d, KernelId::Shaken).expect("small instance");
        worst_stat = worst_stat.max(stationary_check(&shaken, &pi));
        worst_db = worst_db.max(detailed_balance_check(&shaken, &pi).0);
        worst_marginal = worst_marginal.max(marginal_identity_check(&d).expect("small instance"));
        let alt = exact_kernel(&d, KernelId::Alternate).expect("small instance");
        let pib = pair_gibbs(&d);
        worst_alt_stat = worst_alt_stat.max(stationary_check(&alt, &pib));
    }
    checks.push(CheckResult {
        name: "stationarity",
        value: worst_stat,
        budget: budgets.stationarity,
        cmp: "<=",
        pass: worst_stat <= budgets.stationarity,
        detail: format!("worst over {VERIFY_INSTANCES} seeded doublings"),
    });
    checks.push(CheckResult {
        name: "reversibility",
        value: worst_db,
        budget: budgets.reversibility,
        cmp: "<=",
        pass: worst_db <= budgets.reversibility,
        detail: "largest detailed-balance violation of the composed kernel".into(),
    });
    checks.push(CheckResult {
        name: "marginal_identity",
        value: worst_marginal,
        budget: budgets.marginal_identity,
        cmp: "<=",
        pass: worst_marginal <= budgets.marginal_identity,
        detail: "one-copy kernel vs second-copy marginal of the lifted kernel".into(),
    });
    checks.push(CheckResult {
        name: "alternate_stationarity",
        value: worst_alt_stat,
        budget: budgets.alternate_stationarity,
        cmp: "<=",
        pass: worst_alt_stat <= budgets.alternate_stationarity,
        detail: "pair Gibbs measure under the lifted kernel".into(),
    });

    // non-reversibility witness: all-equal weights, all-plus pair against
    // the pair with the whole second copy flipped
    let witness = {
        let d = DoublingGraph::complete_bipartite_pair(2, 1.0);
        let space = StateSpace::for_graph(d.parent());
        let n = space.count();
        let alt = exact_kernel(&d, KernelId::Alternate).expect("small witness instance");
        let pib = pair_gibbs(&d);
        let all_plus = space.index_of(&SpinConfiguration::all_plus(2));
        let all_minus = space.index_of(&SpinConfiguration::all_minus(2));
        let from = all_plus + all_plus * n;
        let to = all_plus + all_minus * n;
        (pib.prob(from) * alt.entry(from, to) - pib.prob(to) * alt.entry(to, from)).abs()
    };
    checks.push(CheckResult {
        name: "alternate_nonreversibility",
        value: witness,
        budget: budgets.witness_floor,
        cmp: ">",
        pass: witness > budgets.witness_floor,
        detail: "complete-bipartite witness pair must violate detailed balance".into(),
    });

    let unpacked = unpacked_weight_check(3, 0.7, 1.1, -0.2, 0).expect("3x3 torus");
    checks.push(CheckResult {
        name: "unpacked_weight",
        value: unpacked,
        budget: budgets.unpacked_weight,
        cmp: "<=",
        pass: unpacked <= budgets.unpacked_weight,
        detail: "product formula vs cosh formula, all 512 configurations".into(),
    });

    let mut worst_min_identity = 0.0f64;
    for i in 0..VERIFY_INSTANCES {
        let g = random_graph(
            seed.wrapping_mul(0x2000).wrapping_add(i),
            2,
            8,
            false,
            i % 2 == 0,
        );
        let o = orient(&g, OrientStrategy::Seeded(i));
        let q = crate::optimize::q_threshold(&g, &o) + 0.01;
        let d = crate::graph::build_doubling(g, &o, q).expect("valid orientation");
        let report = min_identity_check(&d, budgets.minimum_identity).expect("small instance");
        worst_min_identity = worst_min_identity.max(report.discrepancy);
    }
    checks.push(CheckResult {
        name: "minimum_identity",
        value: worst_min_identity,
        budget: budgets.minimum_identity,
        cmp: "<=",
        pass: worst_min_identity <= budgets.minimum_identity,
        detail: format!(
            "pair minimum vs single minimum shifted by q|V|, {VERIFY_INSTANCES} instances"
        ),
    });

    VerificationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::prob_plus;
    use crate::graph::{build_doubling, Orientation};
    use crate::lattice::TriangularLattice;
    use approx::assert_relative_eq;

    fn single_vertex_doubling(q: f64, lambda: f64) -> DoublingGraph {
        let g = InteractionGraph::new(vec![lambda], &[], &[]).unwrap();
        let o = orient(&g, OrientStrategy::Canonical);
        build_doubling(g, &o, q).unwrap()
    }

    #[test]
    fn state_space_bit_encoding() {
        // bit i of an index holds the spin of the i-th free site, set = +1
        let g = InteractionGraph::new(vec![0.0; 4], &[(0, 1, 1.0)], &[(1, -1)]).unwrap();
        let space = StateSpace::for_graph(&g);
        assert_eq!(space.free_len(), 3);
        assert_eq!(space.count(), 8);
        let c = space.config(0b101);
        // free sites are 0, 2, 3; bits 0 and 2 set -> sites 0 and 3 up
        assert_eq!(c.spins(), &[1, -1, -1, 1]);
        assert_eq!(space.index_of(&c), 0b101);
        for i in 0..space.count() {
            assert_eq!(space.index_of(&space.config(i)), i);
        }
    }

    #[test]
    fn single_free_site_half_kernel() {
        let d = single_vertex_doubling(1.0, 0.0);
        let k = exact_kernel(&d, KernelId::HalfForward).unwrap();
        let stay = 1.0 / (1.0 + (-2.0f64).exp());
        assert_relative_eq!(k.entry(1, 1), stay, epsilon = 1e-15);
        assert_relative_eq!(k.entry(0, 0), stay, epsilon = 1e-15);
        assert_relative_eq!(k.entry(1, 0), 1.0 - stay, epsilon = 1e-15);
    }

    #[test]
    fn shaken_kernel_is_product_of_halves() {
        let d = random_doubling(5);
        let shaken = exact_kernel(&d, KernelId::Shaken).unwrap();
        let by_hand = exact_kernel(&d, KernelId::HalfForward)
            .unwrap()
            .matmul(&exact_kernel(&d, KernelId::HalfBackward).unwrap())
            .unwrap();
        for i in 0..shaken.states() {
            for j in 0..shaken.states() {
                assert!((shaken.entry(i, j) - by_hand.entry(i, j)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        let g = InteractionGraph::zero_field(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let o = Orientation::parse("o 0 1\no 1 2\no 2 0\n", &g).unwrap();
        let d = build_doubling(g, &o, 0.7).unwrap();
        for id in [
            KernelId::HalfForward,
            KernelId::HalfBackward,
            KernelId::Shaken,
            KernelId::ShakenReversed,
            KernelId::Alternate,
        ] {
            let k = exact_kernel(&d, id).unwrap();
            assert!(k.max_row_sum_error() <= 1e-12, "{id:?}");
        }
    }

    #[test]
    fn kernel_cap_is_enforced() {
        let d = crate::lattice::z2_doubling(4, 1.0, 1.0, 0.0, &[]).unwrap(); // 16 free
        assert!(matches!(
            exact_kernel(&d, KernelId::Shaken),
            Err(ExactError::StateCapExceeded { .. })
        ));
        let d3 = crate::lattice::z2_doubling(3, 1.0, 1.0, 0.0, &[]).unwrap(); // 9 free
        assert!(exact_kernel(&d3, KernelId::Shaken).is_ok());
        // pair states square the count
        assert!(matches!(
            exact_kernel(&d3, KernelId::Alternate),
            Err(ExactError::StateCapExceeded { .. })
        ));
    }

    #[test]
    fn uniform_is_stationary_without_interaction() {
        let g = InteractionGraph::zero_field(3, &[]).unwrap();
        let o = orient(&g, OrientStrategy::Canonical);
        let d = build_doubling(g, &o, 0.0).unwrap();
        let k = exact_kernel(&d, KernelId::Shaken).unwrap();
        let uniform = ExactDistribution::uniform(8);
        assert!(stationary_check(&k, &uniform) <= 1e-15);
    }

    #[test]
    fn kernel_entries_are_strictly_positive() {
        // finite parameters make every free-spin transition possible
        let d = random_doubling(13);
        let k = exact_kernel(&d, KernelId::Shaken).unwrap();
        for i in 0..k.states() {
            for j in 0..k.states() {
                assert!(k.entry(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn heat_bath_kernel_satisfies_detailed_balance() {
        let g = InteractionGraph::new(
            vec![0.1, -0.2, 0.3],
            &[(0, 1, 0.6), (1, 2, -0.8), (0, 2, 0.5)],
            &[],
        )
        .unwrap();
        let k = exact_heat_bath_kernel(&g).unwrap();
        let (violation, _) = detailed_balance_check(&k, &gibbs(&g));
        assert!(violation <= 1e-15, "violation {violation}");
    }

    #[test]
    fn decoupled_marginal_identity_factorizes() {
        let g = InteractionGraph::zero_field(2, &[]).unwrap();
        let o = orient(&g, OrientStrategy::Canonical);
        let d = build_doubling(g, &o, 0.8).unwrap();
        assert!(marginal_identity_check(&d).unwrap() <= 1e-15);
        // with no couplings the composed kernel is a product of one-site
        // kernels
        let k = exact_kernel(&d, KernelId::Shaken).unwrap();
        let single = exact_kernel(&single_vertex_doubling(0.8, 0.0), KernelId::Shaken).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = single.entry(i & 1, j & 1) * single.entry(i >> 1, j >> 1);
                assert_relative_eq!(k.entry(i, j), expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn log_weight_factorization_at_nine_free_spins() {
        // closed-form weight against the direct sum over all 512 second
        // copies of the 3x3 torus
        let d = crate::lattice::z2_doubling(3, 0.6, 1.3, -0.15, &[]).unwrap();
        let space = StateSpace::for_graph(d.parent());
        let configs: Vec<SpinConfiguration> =
            (0..space.count()).map(|i| space.config(i)).collect();
        for &sigma_index in &[0usize, 37, 200, 511] {
            let sigma = &configs[sigma_index];
            let mut acc = 0.0f64;
            for tau in &configs {
                acc += (-d.pair_energy_unchecked(sigma.spins(), tau.spins())).exp();
            }
            let direct = acc.ln();
            let closed = d.log_stationary_weight(sigma);
            assert!(
                (closed - direct).abs() <= 1e-12 * (1.0 + direct.abs()),
                "config {sigma_index}: {closed} vs {direct}"
            );
        }
    }

    #[test]
    fn decoupled_compositions_share_one_law() {
        // without couplings the two composition orders are the same kernel
        let g = InteractionGraph::new(vec![0.3, -0.2], &[], &[]).unwrap();
        let o = orient(&g, OrientStrategy::Canonical);
        let d = build_doubling(g, &o, 0.6).unwrap();
        let fwd = exact_kernel(&d, KernelId::Shaken).unwrap();
        let rev = exact_kernel(&d, KernelId::ShakenReversed).unwrap();
        for i in 0..fwd.states() {
            for j in 0..fwd.states() {
                assert!((fwd.entry(i, j) - rev.entry(i, j)).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn marginal_identity_on_small_torus() {
        let d = crate::lattice::z2_doubling(2, 0.4, 0.6, -0.1, &[]).unwrap();
        assert!(marginal_identity_check(&d).unwrap() <= 1e-13);
    }

    #[test]
    fn tv_distance_basics() {
        let mu = ExactDistribution::uniform(4);
        assert_eq!(tv_distance(&mu, &mu), 0.0);
        let a = ExactDistribution::point_mass(4, 0);
        let b = ExactDistribution::point_mass(4, 3);
        assert_eq!(tv_distance(&a, &b), 1.0);
        assert_eq!(tv_distance(&b, &a), 1.0);
    }

    #[test]
    fn tv_reference_value_on_3x3_torus() {
        // pinned once from this oracle
        let d = crate::lattice::z2_doubling(3, 1.0, 2.0, -0.1, &[]).unwrap();
        let tv = tv_distance(&shaken_stationary(&d), &gibbs(d.parent()));
        assert_relative_eq!(tv, 2.7100009984156385e-3, epsilon = 1e-12);
    }

    #[test]
    fn stationary_weight_matches_power_iteration() {
        for seed in [2u64, 31, 77] {
            let d = random_doubling(seed);
            let k = exact_kernel(&d, KernelId::Shaken).unwrap();
            let by_eigenvector = power_stationary(&k, 400_000, 1e-16);
            let by_weight = shaken_stationary(&d);
            assert!(tv_distance(&by_eigenvector, &by_weight) <= 1e-10);
        }
    }

    #[test]
    fn unpacked_weight_identity_variants() {
        // all configurations on the 3x3 torus, with and without field
        assert!(unpacked_weight_check(3, 0.7, 1.1, -0.2, 0).unwrap() <= 1e-12);
        assert!(unpacked_weight_check(3, 0.7, 1.1, 0.0, 0).unwrap() <= 1e-12);
        // sampled path above the enumeration cap
        assert!(unpacked_weight_check(5, 0.5, 0.9, -0.1, 64).unwrap() <= 1e-12);
    }

    #[test]
    fn brute_force_min_ferromagnetic_triangle() {
        let g = InteractionGraph::zero_field(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let res = brute_force_min(&g).unwrap();
        assert_eq!(res.min_energy, -3.0);
        assert_eq!(res.tie_count, 2);
        let mut pm: Vec<String> = res.minimizers.iter().map(|m| m.to_pm_string()).collect();
        pm.sort();
        assert_eq!(pm, vec!["+++", "---"]);
    }

    #[test]
    fn pair_minimum_matches_full_enumeration() {
        // independent oracle: plain double loop over both copies
        for seed in [3u64, 19, 40] {
            let d = random_doubling(seed);
            let space = StateSpace::for_graph(d.parent());
            let mut oracle = f64::INFINITY;
            for i in 0..space.count() {
                let a = space.config(i);
                for j in 0..space.count() {
                    let b = space.config(j);
                    oracle = oracle.min(d.pair_energy_unchecked(a.spins(), b.spins()));
                }
            }
            let fast = brute_force_min_pair(&d).unwrap();
            assert_relative_eq!(fast.min_energy, oracle, epsilon = 1e-12);
            for p in &fast.minimizers {
                assert_relative_eq!(
                    d.pair_energy_unchecked(p.first.spins(), p.second.spins()),
                    oracle,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn minimum_identity_holds_just_above_threshold() {
        for seed in [1u64, 8, 21] {
            let g = random_graph(seed, 2, 6, false, false);
            let o = orient(&g, OrientStrategy::Seeded(seed));
            let q = crate::optimize::q_threshold(&g, &o) + 0.01;
            let d = build_doubling(g, &o, q).unwrap();
            let report = min_identity_check(&d, 1e-9).unwrap();
            assert!(report.identity_holds, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn minimum_identity_counterexample_below_threshold() {
        // frustrated cycle where a non-diagonal pair beats every diagonal
        let g =
            InteractionGraph::zero_field(3, &[(0, 1, -1.0), (1, 2, -1.0), (0, 2, -1.0)]).unwrap();
        let o = Orientation::parse("o 0 1\no 1 2\no 2 0\n", &g).unwrap();
        let d = build_doubling(g, &o, 0.2).unwrap();
        let report = min_identity_check(&d, 1e-9).unwrap();
        assert!(!report.identity_holds);
        assert!(report.min_pair < report.min_single - 3.0 * report.q);
        let witness = report.nondiagonal_witness.expect("witness pair");
        assert_ne!(witness.first, witness.second);
    }

    #[test]
    fn threshold_boundary_counts_as_unsatisfied() {
        // q exactly at the threshold must not claim the guarantee
        let g = InteractionGraph::zero_field(2, &[(0, 1, 1.0)]).unwrap();
        let o = orient(&g, OrientStrategy::Canonical);
        let d = build_doubling(g, &o, 1.0).unwrap();
        let report = min_identity_check(&d, 1e-9).unwrap();
        assert_eq!(report.threshold, 1.0);
        assert!(report.q <= report.threshold);
    }

    #[test]
    fn distribution_constructor_rejects_bad_input() {
        assert!(matches!(
            ExactDistribution::new(vec![0.5, -0.1, 0.6]),
            Err(ExactError::NegativeEntry { .. })
        ));
        assert!(matches!(
            ExactDistribution::new(vec![0.5, 0.4]),
            Err(ExactError::NotNormalized { .. })
        ));
        assert!(ExactDistribution::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn triangular_doubling_enumerates_cleanly() {
        // 2x2 triangular torus: parallel edges collapse but kernels stay
        // stochastic and the stationary weight stays exact
        let lat = TriangularLattice::new(2).unwrap();
        assert_eq!(lat.sites(), 4);
        let d = crate::lattice::triangular_doubling(2, 0.4, 0.6).unwrap();
        let k = exact_kernel(&d, KernelId::Shaken).unwrap();
        assert!(k.max_row_sum_error() <= 1e-12);
        let pi = shaken_stationary(&d);
        assert!(stationary_check(&k, &pi) <= 1e-12);
    }

    #[test]
    fn half_kernel_row_matches_site_probabilities() {
        let d = random_doubling(9);
        let space = StateSpace::for_graph(d.parent());
        let k = exact_kernel(&d, KernelId::HalfForward).unwrap();
        let src = space.config(1 % space.count());
        let row = k.row(space.index_of(&src));
        // reconstruct one entry by hand from the site conditionals
        let target = space.config(space.count() - 1);
        let mut p = 1.0;
        for &x in d.parent().free_sites() {
            let pp = prob_plus(d.local_field_12(&src, x));
            p *= if target.spin(x) == 1 { pp } else { 1.0 - pp };
        }
        assert_relative_eq!(row[space.count() - 1], p, epsilon = 1e-14);
    }
}
