//! Shaken dynamics for Ising-type spin systems on arbitrary weighted graphs.
//!
//! The library doubles an interaction graph into a bipartite pair graph and
//! runs a reversible parallel Markov chain on it: two heat-bath half-steps
//! with opposite interaction directions, every site updated simultaneously.
//! The stationary measure of the composition is known in closed form, which
//! makes small systems exactly checkable and, for a large enough
//! self-interaction weight, turns the chain into a heuristic minimizer for
//! quadratic spin objectives.
//!
//! Modules:
//!
//! - [`graph`]: interaction graphs, orientations, doubled graphs and the
//!   text instance format;
//! - [`hamiltonian`]: energies, local fields and log-domain stationary
//!   weights;
//! - [`dynamics`]: the stochastic kernels and a deterministic,
//!   thread-count-independent run loop;
//! - [`exact`]: brute-force enumeration, exact kernels, stationarity /
//!   reversibility / identity checks and exhaustive minimization;
//! - [`optimize`]: heuristic ground-state search with a matched
//!   single-spin-flip baseline;
//! - [`lattice`]: periodic square and triangular lattices and their
//!   doubled graphs;
//! - [`critical`]: the triangular-lattice critical curve and the
//!   even-subgraph cell computation behind it;
//! - [`rng`]: counter-based randomness keyed by `(seed, sweep, phase, site)`.

pub mod critical;
pub mod dynamics;
pub mod exact;
pub mod graph;
pub mod hamiltonian;
pub mod lattice;
pub mod optimize;
pub mod rng;

pub use dynamics::{run, ChainTarget, KernelChoice, RunOptions, RunResult};
pub use graph::{
    build_doubling, orient, parse_graph, validate_doubling, DoublingGraph, InteractionGraph,
    OrientStrategy, Orientation,
};
pub use hamiltonian::{PairConfiguration, SpinConfiguration};
pub use rng::{CounterRng, Phase};
