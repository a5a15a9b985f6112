//! Periodic lattices and their doubled graphs: the square torus with the
//! down-left / up-right sweep split and the triangular lattice with a
//! left / right neighbor split.

use std::fmt;

use crate::graph::{DoublingGraph, GraphError, InteractionGraph};

#[derive(Debug, Clone, PartialEq)]
pub enum LatticeError {
    SideTooSmall { side: usize, min: usize },
    OddSide { side: usize },
    Graph(GraphError),
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::SideTooSmall { side, min } => {
                write!(f, "lattice side {side} below minimum {min}")
            }
            LatticeError::OddSide { side } => {
                write!(f, "triangular side {side} must be even for periodic closure")
            }
            LatticeError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LatticeError {}

impl From<GraphError> for LatticeError {
    fn from(e: GraphError) -> Self {
        LatticeError::Graph(e)
    }
}

/// `L x L` periodic square lattice, sites indexed `row * L + col`.
#[derive(Debug, Clone, Copy)]
pub struct TorusLattice {
    side: usize,
}

impl TorusLattice {
    pub fn new(side: usize) -> Result<Self, LatticeError> {
        if side < 2 {
            return Err(LatticeError::SideTooSmall { side, min: 2 });
        }
        Ok(TorusLattice { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.side * self.side
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        (row % self.side) * self.side + col % self.side
    }

    pub fn up(&self, x: usize) -> usize {
        let (r, c) = (x / self.side, x % self.side);
        self.index(r + self.side - 1, c)
    }

    pub fn down(&self, x: usize) -> usize {
        let (r, c) = (x / self.side, x % self.side);
        self.index(r + 1, c)
    }

    pub fn right(&self, x: usize) -> usize {
        let (r, c) = (x / self.side, x % self.side);
        self.index(r, c + 1)
    }

    pub fn left(&self, x: usize) -> usize {
        let (r, c) = (x / self.side, x % self.side);
        self.index(r, c + self.side - 1)
    }
}

/// Doubled torus with uniform coupling and field: every site's first copy
/// sends interaction edges to its up and right neighbors' second copies, so
/// the first half-step reads the down-left field and the second the up-right
/// field. Each free doubled vertex then has degree 3, the honeycomb pattern.
///
/// `boundary` lists frozen sites with their fixed spins. At `l = 2` the wrap
/// reaches the same neighbor from both sides and the parent edge list keeps
/// both instances, preserving the diagonal energy identity.
pub fn z2_doubling(
    l: usize,
    coupling: f64,
    q: f64,
    lambda: f64,
    boundary: &[(usize, i8)],
) -> Result<DoublingGraph, LatticeError> {
    let torus = TorusLattice::new(l)?;
    let n = torus.sites();
    let mut edges = Vec::with_capacity(2 * n);
    for x in 0..n {
        edges.push((x, torus.up(x), coupling));
        edges.push((x, torus.right(x), coupling));
    }
    let parent = InteractionGraph::with_parallel_edges(vec![lambda; n], &edges, boundary)?;
    let interaction: Vec<(usize, usize, f64)> =
        parent.edges().iter().map(|e| (e.u, e.v, e.coupling)).collect();
    Ok(DoublingGraph::from_parts(parent, q, &interaction, vec![true; n])?)
}

/// `L x L` rhombic triangular lattice in axial coordinates, sites indexed
/// `a * L + b`. The six neighbors of a site split into the three with
/// lexicographically smaller axial offset (`left`) and their mirrors
/// (`right`); `y in left(x)` iff `x in right(y)`.
#[derive(Debug, Clone, Copy)]
pub struct TriangularLattice {
    side: usize,
}

const LEFT_OFFSETS: [(isize, isize); 3] = [(-1, 0), (-1, 1), (0, -1)];
const RIGHT_OFFSETS: [(isize, isize); 3] = [(1, 0), (1, -1), (0, 1)];

impl TriangularLattice {
    pub fn new(side: usize) -> Result<Self, LatticeError> {
        if side < 2 {
            return Err(LatticeError::SideTooSmall { side, min: 2 });
        }
        if side % 2 != 0 {
            return Err(LatticeError::OddSide { side });
        }
        Ok(TriangularLattice { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.side * self.side
    }

    fn offset(&self, x: usize, d: (isize, isize)) -> usize {
        let l = self.side as isize;
        let a = (x / self.side) as isize;
        let b = (x % self.side) as isize;
        let na = (a + d.0).rem_euclid(l) as usize;
        let nb = (b + d.1).rem_euclid(l) as usize;
        na * self.side + nb
    }

    pub fn left_neighbors(&self, x: usize) -> [usize; 3] {
        LEFT_OFFSETS.map(|d| self.offset(x, d))
    }

    pub fn right_neighbors(&self, x: usize) -> [usize; 3] {
        RIGHT_OFFSETS.map(|d| self.offset(x, d))
    }
}

/// Doubled triangular lattice without external field: each site's second
/// copy receives interaction edges from its three left neighbors' first
/// copies. Every doubled vertex has degree 4 (three couplings plus the self
/// edge), so the pair interaction lives on a square lattice, homogeneous
/// when `coupling == q`.
pub fn triangular_doubling(
    l: usize,
    coupling: f64,
    q: f64,
) -> Result<DoublingGraph, LatticeError> {
    let lattice = TriangularLattice::new(l)?;
    let n = lattice.sites();
    let mut interaction = Vec::with_capacity(3 * n);
    for x in 0..n {
        for y in lattice.left_neighbors(x) {
            interaction.push((y, x, coupling));
        }
    }
    let edges: Vec<(usize, usize, f64)> = interaction.clone();
    let parent = InteractionGraph::with_parallel_edges(vec![0.0; n], &edges, &[])?;
    Ok(DoublingGraph::from_parts(parent, q, &interaction, vec![true; n])?)
}
