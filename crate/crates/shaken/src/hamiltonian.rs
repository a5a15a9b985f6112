//! Energies, local fields and the closed-form stationary weight.
//!
//! Single-configuration energy on a graph `G`:
//!
//! ```text
//! H(s) = - sum_{edges {x,y}} J_xy s_x s_y - 2 sum_x lambda_x s_x
//! ```
//!
//! Pair energy on a doubled graph, with `s` on copy 1 and `t` on copy 2:
//!
//! ```text
//! H(s, t) = - sum_{(x1,y2)} J_xy s_x t_y
//!           - sum_x ( q s_x t_x + lambda_x (s_x + t_x) )
//! ```
//!
//! All stationary weights are kept in the log domain; `exp(q |V|)` alone
//! overflows doubles at modest sizes.

use std::fmt;

use crate::graph::{DoublingGraph, InteractionGraph};

/// Assignment of +1/-1 to every vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    SizeMismatch { expected: usize, got: usize },
    FrozenMismatch { vertex: usize },
    BadSpin { vertex: usize, value: i8 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::SizeMismatch { expected, got } => {
                write!(f, "configuration has {got} spins, graph has {expected} vertices")
            }
            ModelError::FrozenMismatch { vertex } => {
                write!(f, "configuration disagrees with the frozen spin at vertex {vertex}")
            }
            ModelError::BadSpin { vertex, value } => {
                write!(f, "spin at vertex {vertex} must be +1 or -1, got {value}")
            }
        }
    }
}

impl std::error::Error for ModelError {}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self, ModelError> {
        for (vertex, &s) in spins.iter().enumerate() {
            if s != 1 && s != -1 {
                return Err(ModelError::BadSpin { vertex, value: s });
            }
        }
        Ok(SpinConfiguration { spins })
    }

    pub fn all_plus(n: usize) -> Self {
        SpinConfiguration { spins: vec![1; n] }
    }

    pub fn all_minus(n: usize) -> Self {
        SpinConfiguration { spins: vec![-1; n] }
    }

    pub(crate) fn from_raw(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        SpinConfiguration { spins }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spin(&self, x: usize) -> i8 {
        self.spins[x]
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn set(&mut self, x: usize, s: i8) {
        debug_assert!(s == 1 || s == -1);
        self.spins[x] = s;
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        SpinConfiguration {
            spins: self.spins.iter().map(|&s| -s).collect(),
        }
    }

    /// Mean spin.
    pub fn magnetization(&self) -> f64 {
        if self.spins.is_empty() {
            return 0.0;
        }
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / self.spins.len() as f64
    }

    /// Right length and frozen sites holding their fixed values.
    pub fn consistent_with(&self, graph: &InteractionGraph) -> Result<(), ModelError> {
        if self.len() != graph.vertex_count() {
            return Err(ModelError::SizeMismatch {
                expected: graph.vertex_count(),
                got: self.len(),
            });
        }
        for x in 0..self.len() {
            if let Some(b) = graph.frozen_spin(x) {
                if self.spins[x] != b {
                    return Err(ModelError::FrozenMismatch { vertex: x });
                }
            }
        }
        Ok(())
    }

    /// `+`/`-` rendering in vertex order.
    pub fn to_pm_string(&self) -> String {
        self.spins
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect()
    }
}

/// Two configurations on the same vertex set, one per copy of a doubled
/// graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConfiguration {
    pub first: SpinConfiguration,
    pub second: SpinConfiguration,
}

impl PairConfiguration {
    pub fn new(first: SpinConfiguration, second: SpinConfiguration) -> Result<Self, ModelError> {
        if first.len() != second.len() {
            return Err(ModelError::SizeMismatch {
                expected: first.len(),
                got: second.len(),
            });
        }
        Ok(PairConfiguration { first, second })
    }

    /// Both copies equal to `sigma`.
    pub fn diagonal(sigma: &SpinConfiguration) -> Self {
        PairConfiguration {
            first: sigma.clone(),
            second: sigma.clone(),
        }
    }

    pub fn consistent_with(&self, d: &DoublingGraph) -> Result<(), ModelError> {
        self.first.consistent_with(d.parent())?;
        self.second.consistent_with(d.parent())
    }
}

impl InteractionGraph {
    /// `H(s) = -sum J_xy s_x s_y - 2 sum lambda_x s_x`.
    pub fn energy(&self, sigma: &SpinConfiguration) -> Result<f64, ModelError> {
        sigma.consistent_with(self)?;
        Ok(self.energy_unchecked(sigma.spins()))
    }

    pub(crate) fn energy_unchecked(&self, spins: &[i8]) -> f64 {
        let mut coupling = 0.0;
        for e in self.edges() {
            coupling += e.coupling * (spins[e.u] as f64) * (spins[e.v] as f64);
        }
        let mut field = 0.0;
        for (x, &l) in self.fields().iter().enumerate() {
            field += l * spins[x] as f64;
        }
        -coupling - 2.0 * field
    }
}

impl DoublingGraph {
    /// Pair energy `H(first, second)` on the doubled graph.
    pub fn pair_energy(&self, pair: &PairConfiguration) -> Result<f64, ModelError> {
        pair.consistent_with(self)?;
        Ok(self.pair_energy_unchecked(pair.first.spins(), pair.second.spins()))
    }

    pub(crate) fn pair_energy_unchecked(&self, first: &[i8], second: &[i8]) -> f64 {
        let mut total = 0.0;
        for e in self.interaction_edges() {
            total += e.coupling * (first[e.u] as f64) * (second[e.v] as f64);
        }
        for x in 0..self.vertex_count() {
            let s1 = first[x] as f64;
            let s2 = second[x] as f64;
            if self.has_self_edge(x) {
                total += self.q() * s1 * s2;
            }
            total += self.parent().field(x) * (s1 + s2);
        }
        -total
    }

    /// Local field on `x`'s second copy given copy-1 spins, scaled:
    /// `scale * (sum_{(y1,x2)} J_xy s_y + lambda_x) + q s_x`.
    /// The self term is never scaled; ramps anneal couplings and fields only.
    pub(crate) fn field_into_copy2_scaled(&self, spins: &[i8], x: usize, scale: f64) -> f64 {
        let mut h = 0.0;
        for &(y, j) in self.edges_into_copy2(x) {
            h += j * spins[y] as f64;
        }
        h += self.parent().field(x);
        h *= scale;
        if self.has_self_edge(x) {
            h += self.q() * spins[x] as f64;
        }
        h
    }

    /// Mirror of [`DoublingGraph::field_into_copy2_scaled`] with the edge
    /// roles swapped: `scale * (sum_{(x1,y2)} J_xy t_y + lambda_x) + q t_x`.
    pub(crate) fn field_from_copy1_scaled(&self, spins: &[i8], x: usize, scale: f64) -> f64 {
        let mut h = 0.0;
        for &(y, j) in self.edges_from_copy1(x) {
            h += j * spins[y] as f64;
        }
        h += self.parent().field(x);
        h *= scale;
        if self.has_self_edge(x) {
            h += self.q() * spins[x] as f64;
        }
        h
    }

    /// Field driving the first half-step at free site `x`: couplings arrive
    /// on `x`'s second copy, so the sum runs over edges `(y1, x2)`.
    ///
    /// # Panics
    ///
    /// If `x` is frozen; frozen sites are never resampled.
    pub fn local_field_12(&self, sigma: &SpinConfiguration, x: usize) -> f64 {
        assert!(
            self.parent().is_free(x),
            "local field requested at frozen vertex {x}"
        );
        self.field_into_copy2_scaled(sigma.spins(), x, 1.0)
    }

    /// Field driving the second half-step at free site `x`; the sum runs
    /// over edges `(x1, y2)`.
    ///
    /// # Panics
    ///
    /// If `x` is frozen.
    pub fn local_field_21(&self, tau: &SpinConfiguration, x: usize) -> f64 {
        assert!(
            self.parent().is_free(x),
            "local field requested at frozen vertex {x}"
        );
        self.field_from_copy1_scaled(tau.spins(), x, 1.0)
    }

    /// Log of the unnormalized stationary weight
    /// `Z_s = sum_t exp(-H(s, t))`, the sum running over the free sites of
    /// copy 2 (frozen sites keep their fixed value):
    ///
    /// ```text
    /// log Z_s = sum_x lambda_x s_x
    ///         + sum_{x frozen} b_x h12_x(s)
    ///         + sum_{x free} log(2 cosh h12_x(s))
    /// ```
    pub fn log_stationary_weight(&self, sigma: &SpinConfiguration) -> f64 {
        self.log_weight_directed(sigma, true)
    }

    /// Log of the mirror weight `sum_t exp(-H(t, s))`, summed over copy 1.
    /// Stationary weight of the reversed composition of half-steps.
    pub fn log_stationary_weight_reversed(&self, sigma: &SpinConfiguration) -> f64 {
        self.log_weight_directed(sigma, false)
    }

    fn log_weight_directed(&self, sigma: &SpinConfiguration, forward: bool) -> f64 {
        debug_assert!(sigma.consistent_with(self.parent()).is_ok());
        let spins = sigma.spins();
        let mut log_w = 0.0;
        for x in 0..self.vertex_count() {
            log_w += self.parent().field(x) * spins[x] as f64;
            let h = if forward {
                self.field_into_copy2_scaled(spins, x, 1.0)
            } else {
                self.field_from_copy1_scaled(spins, x, 1.0)
            };
            match self.parent().frozen_spin(x) {
                Some(b) => log_w += b as f64 * h,
                None => log_w += log_2cosh(h),
            }
        }
        log_w
    }
}

/// `log(2 cosh h)` without overflow for large `|h|`.
pub fn log_2cosh(h: f64) -> f64 {
    h.abs() + (-2.0 * h.abs()).exp().ln_1p()
}
