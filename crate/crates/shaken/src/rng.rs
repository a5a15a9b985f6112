//! Counter-based randomness.
//!
//! Every random number used by a sweep is a pure function of
//! `(seed, sweep, phase, site)`. There is no generator state to share or
//! lock, so a site loop may run serially, split over any number of worker
//! threads, or in any order, and still consume exactly the same numbers.

/// Named stream within a run. Each phase draws from a disjoint substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// First half-step of a sweep (copy 1 drives copy 2).
    Forward,
    /// Second half-step of a sweep (copy 2 drives copy 1).
    Backward,
    /// Single-spin-flip baseline updates.
    Baseline,
    /// Initial spin assignment of a chain.
    Init,
    /// Seeded edge-orientation choices.
    Orientation,
    /// Random instance generation (couplings, fields).
    Instance,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Forward => 0,
            Phase::Backward => 1,
            Phase::Baseline => 2,
            Phase::Init => 3,
            Phase::Orientation => 4,
            Phase::Instance => 5,
        }
    }
}

/// Stateless keyed generator. `Clone`d and shared freely; all methods take
/// `&self`.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

// SplitMix64 finalizer; full avalanche on 64 bits.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Raw 64-bit word for the counter tuple. `site` must stay below 2^56
    /// so it cannot collide with the phase tag.
    pub fn raw(&self, sweep: u64, phase: Phase, site: u64) -> u64 {
        debug_assert!(site < 1 << 56, "site counter out of range");
        let mut h = mix(self.seed ^ GOLDEN);
        h = mix(h ^ sweep.wrapping_mul(GOLDEN | 1));
        mix(h ^ (phase.tag() << 56) ^ site)
    }

    /// Uniform draw in `[0, 1)`, 53 significant bits.
    pub fn uniform(&self, sweep: u64, phase: Phase, site: u64) -> f64 {
        (self.raw(sweep, phase, site) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin for the counter tuple.
    pub fn coin(&self, sweep: u64, phase: Phase, site: u64) -> bool {
        self.raw(sweep, phase, site) & 1 == 1
    }
}
