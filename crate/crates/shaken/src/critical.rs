//! Critical curve of the shaken dynamics on the triangular lattice.
//!
//! The square pair-interaction lattice induced by the triangular split is
//! criticized by an even-subgraph count on its elementary cell: the sum of
//! `prod tanh(weight)` over even subgraphs winding evenly around both torus
//! directions must equal the sum over the odd-winding ones. With
//! `t = tanh(coupling)` and `s = tanh(q)` the cell below yields
//!
//! ```text
//! 1 + t^3 s = 3 t s + 3 t^2
//! ```

use std::collections::BTreeMap;
use std::fmt;

/// Residual of the critical equation, `1 + t^3 s - 3 t s - 3 t^2`, with
/// `t = tanh(coupling)` and `s = tanh(q)`. Zero on the critical curve.
pub fn critical_residual(coupling: f64, q: f64) -> f64 {
    let t = coupling.tanh();
    let s = q.tanh();
    residual_ts(t, s)
}

fn residual_ts(t: f64, s: f64) -> f64 {
    1.0 + t * t * t * s - 3.0 * t * s - 3.0 * t * t
}

/// One solved point on the critical curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub coupling: f64,
    /// Self-interaction weight; infinite in the collapsed-lattice limit.
    pub q: f64,
    pub t: f64,
    pub s: f64,
}

/// Constraint fixing one degree of freedom of the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalConstraint {
    /// Solve for `q` at this coupling.
    FixedCoupling(f64),
    /// Solve for the coupling at this `q`.
    FixedQ(f64),
    /// Square-lattice line `q = coupling`.
    EqualCouplingQ,
    /// Collapsed limit `q -> infinity` (`s = 1`), the triangular lattice.
    InfiniteQ,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CriticalError {
    NoRoot { detail: String },
    CellTooLarge { vertices: usize, edges: usize },
}

impl fmt::Display for CriticalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalError::NoRoot { detail } => write!(f, "no root in bracket: {detail}"),
            CriticalError::CellTooLarge { vertices, edges } => write!(
                f,
                "cell with {vertices} vertices / {edges} edges exceeds the enumeration cap"
            ),
        }
    }
}

impl std::error::Error for CriticalError {}

// tanh saturates well inside these brackets.
const COUPLING_BRACKET: (f64, f64) = (1e-6, 5.0);
const Q_BRACKET: (f64, f64) = (0.0, 30.0);
const BISECTION_TOL: f64 = 1e-13;

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> Result<f64, CriticalError> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CriticalError::NoRoot {
            detail: format!("f({lo}) = {flo}, f({hi}) = {fhi} share a sign"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 || hi - lo < BISECTION_TOL {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solve the critical equation under `constraint` by bisection; the residual
/// at the returned point vanishes to roughly 1e-12.
pub fn critical_solve(constraint: CriticalConstraint) -> Result<CriticalPoint, CriticalError> {
    match constraint {
        CriticalConstraint::FixedQ(q) => {
            let coupling = bisect(COUPLING_BRACKET.0, COUPLING_BRACKET.1, |j| {
                critical_residual(j, q)
            })?;
            Ok(CriticalPoint {
                coupling,
                q,
                t: coupling.tanh(),
                s: q.tanh(),
            })
        }
        CriticalConstraint::FixedCoupling(coupling) => {
            let q = bisect(Q_BRACKET.0, Q_BRACKET.1, |q| critical_residual(coupling, q))?;
            Ok(CriticalPoint {
                coupling,
                q,
                t: coupling.tanh(),
                s: q.tanh(),
            })
        }
        CriticalConstraint::EqualCouplingQ => {
            let coupling = bisect(COUPLING_BRACKET.0, COUPLING_BRACKET.1, |j| {
                critical_residual(j, j)
            })?;
            Ok(CriticalPoint {
                coupling,
                q: coupling,
                t: coupling.tanh(),
                s: coupling.tanh(),
            })
        }
        CriticalConstraint::InfiniteQ => {
            let coupling = bisect(COUPLING_BRACKET.0, COUPLING_BRACKET.1, |j| {
                let t = j.tanh();
                residual_ts(t, 1.0)
            })?;
            Ok(CriticalPoint {
                coupling,
                q: f64::INFINITY,
                t: coupling.tanh(),
                s: 1.0,
            })
        }
    }
}

/// Edge weight symbol of an elementary cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellWeight {
    /// Contributes a factor `t = tanh(coupling)`.
    Coupling,
    /// Contributes a factor `s = tanh(q)`.
    SelfInteraction,
}

/// Edge of an elementary cell in the periodic quotient. `winding` counts the
/// signed torus crossings per axis; only its parity matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellEdge {
    pub u: usize,
    pub v: usize,
    pub weight: CellWeight,
    pub winding: (i32, i32),
}

/// Small multigraph quotient cell whose periodic repetition tiles the torus.
#[derive(Debug, Clone)]
pub struct ElementaryCell {
    vertex_count: usize,
    edges: Vec<CellEdge>,
}

pub const MAX_CELL_VERTICES: usize = 4;
pub const MAX_CELL_EDGES: usize = 16;

impl ElementaryCell {
    pub fn new(vertex_count: usize, edges: Vec<CellEdge>) -> Result<Self, CriticalError> {
        if vertex_count > MAX_CELL_VERTICES || edges.len() > MAX_CELL_EDGES {
            return Err(CriticalError::CellTooLarge {
                vertices: vertex_count,
                edges: edges.len(),
            });
        }
        for e in &edges {
            assert!(e.u < vertex_count && e.v < vertex_count, "edge endpoint out of range");
        }
        Ok(ElementaryCell { vertex_count, edges })
    }

    pub fn edges(&self) -> &[CellEdge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }
}

/// Elementary cell of the square pair-interaction lattice induced by the
/// triangular split: two quotient vertices joined by the self edge and three
/// couplings that cross the cell boundary with distinct winding parities.
pub fn triangular_shaken_cell() -> ElementaryCell {
    ElementaryCell::new(
        2,
        vec![
            CellEdge { u: 0, v: 1, weight: CellWeight::SelfInteraction, winding: (0, 0) },
            CellEdge { u: 1, v: 0, weight: CellWeight::Coupling, winding: (1, 0) },
            CellEdge { u: 0, v: 1, weight: CellWeight::Coupling, winding: (0, 1) },
            CellEdge { u: 1, v: 0, weight: CellWeight::Coupling, winding: (1, 1) },
        ],
    )
    .expect("within cell caps")
}

/// Integer polynomial in `t` and `s`, keyed by `(t power, s power)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellPolynomial {
    terms: BTreeMap<(u32, u32), i64>,
}

impl CellPolynomial {
    pub fn zero() -> Self {
        CellPolynomial::default()
    }

    pub fn add_term(&mut self, t_pow: u32, s_pow: u32, coeff: i64) {
        let slot = self.terms.entry((t_pow, s_pow)).or_insert(0);
        *slot += coeff;
        if *slot == 0 {
            self.terms.remove(&(t_pow, s_pow));
        }
    }

    pub fn terms(&self) -> &BTreeMap<(u32, u32), i64> {
        &self.terms
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(tp, sp), &c)| c as f64 * t.powi(tp as i32) * s.powi(sp as i32))
            .sum()
    }

    /// `self - other`.
    pub fn sub(&self, other: &CellPolynomial) -> CellPolynomial {
        let mut out = self.clone();
        for (&(tp, sp), &c) in &other.terms {
            out.add_term(tp, sp, -c);
        }
        out
    }
}

impl fmt::Display for CellPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(tp, sp), &c) in &self.terms {
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", if c < 0 { "-" } else { "+" })?;
            }
            let mag = c.abs();
            let mut wrote = false;
            if mag != 1 || (tp == 0 && sp == 0) {
                write!(f, "{mag}")?;
                wrote = true;
            }
            if tp > 0 {
                if wrote {
                    write!(f, " ")?;
                }
                if tp == 1 { write!(f, "t")? } else { write!(f, "t^{tp}")? }
                wrote = true;
            }
            if sp > 0 {
                if wrote {
                    write!(f, " ")?;
                }
                if sp == 1 { write!(f, "s")? } else { write!(f, "s^{sp}")? }
            }
        }
        Ok(())
    }
}

/// Hard-coded left-minus-right side of the critical equation,
/// `1 + t^3 s - 3 t s - 3 t^2`; the reference the cell enumeration is
/// checked against.
pub fn critical_residual_polynomial() -> CellPolynomial {
    let mut p = CellPolynomial::zero();
    p.add_term(0, 0, 1);
    p.add_term(3, 1, 1);
    p.add_term(1, 1, -3);
    p.add_term(2, 0, -3);
    p
}

/// Enumerate the even subgraphs of a quotient cell and split them by winding
/// parity: subsets with every vertex degree even land in the even-winding
/// sum when their total crossings of both axes are even, otherwise in the
/// odd-winding sum. Returns the two sums as polynomials in `t` and `s`.
pub fn cell_even_subgraphs(
    cell: &ElementaryCell,
) -> Result<(CellPolynomial, CellPolynomial), CriticalError> {
    let m = cell.edges.len();
    let mut even_winding = CellPolynomial::zero();
    let mut odd_winding = CellPolynomial::zero();
    for subset in 0..1u32 << m {
        let mut degree = vec![0u32; cell.vertex_count];
        let mut winding = (0i32, 0i32);
        let mut t_pow = 0u32;
        let mut s_pow = 0u32;
        for (bit, e) in cell.edges.iter().enumerate() {
            if subset >> bit & 1 == 0 {
                continue;
            }
            degree[e.u] += 1;
            degree[e.v] += 1; // a loop contributes 2, always even
            winding.0 += e.winding.0;
            winding.1 += e.winding.1;
            match e.weight {
                CellWeight::Coupling => t_pow += 1,
                CellWeight::SelfInteraction => s_pow += 1,
            }
        }
        if degree.iter().any(|&d| d % 2 != 0) {
            continue;
        }
        if winding.0.rem_euclid(2) == 0 && winding.1.rem_euclid(2) == 0 {
            even_winding.add_term(t_pow, s_pow, 1);
        } else {
            odd_winding.add_term(t_pow, s_pow, 1);
        }
    }
    Ok((even_winding, odd_winding))
}
