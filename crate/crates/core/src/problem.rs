//! The max-consensus linear program on the augmented graph.
//!
//! ```text
//! minimize   sum_i x_i
//! subject to A_ij x_i + A_ji x_j  = 0      (i, j) regular edge
//!            A_ii' x_i + A_i'i x_i' <= -s_i  dummy edge
//! ```
//!
//! with `A_ij = -A_ji = 1` for `i < j`, `A_ii' = -1` and `A_i'i = 0`, so the
//! dummy constraint reads `x_i >= s_i`. Regular edge offsets are zero.

use alloc::format;
use alloc::vec::Vec;

use crate::graph::AugmentedGraph;
use crate::{Error, Result};

/// `A_ii'`, the coefficient of `x_i` on the dummy edge.
pub const DUMMY_COEFFICIENT: f64 = -1.0;
/// `A_i'i`; the dummy side carries no primal variable.
pub const DUMMY_SIDE_COEFFICIENT: f64 = 0.0;
pub const DEFAULT_THETA: f64 = 0.5;

/// One direction `from -> to` of a regular edge; it owns the auxiliary
/// `z_{from|to}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
    /// `A_{from,to}`.
    pub coefficient: f64,
    /// Slot of the opposite direction `to -> from`.
    pub reverse: usize,
}

/// Slot table for the directed regular edges.
///
/// Slots are laid out by ascending `from`, then ascending `to`, so the slots
/// of node `i` are the contiguous range `offsets[i]..offsets[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedEdges {
    edges: Vec<DirectedEdge>,
    offsets: Vec<usize>,
}

impl DirectedEdges {
    fn new(graph: &AugmentedGraph) -> Self {
        let base = graph.base();
        let n = base.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + base.degree(i));
        }
        let mut edges = Vec::with_capacity(offsets[n]);
        for i in 0..n {
            for &j in base.neighbors(i) {
                let pos = base
                    .neighbors(j)
                    .binary_search(&i)
                    .expect("adjacency is symmetric");
                edges.push(DirectedEdge {
                    from: i,
                    to: j,
                    coefficient: if i < j { 1.0 } else { -1.0 },
                    reverse: offsets[j] + pos,
                });
            }
        }
        Self { edges, offsets }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn as_slice(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn get(&self, slot: usize) -> &DirectedEdge {
        &self.edges[slot]
    }

    /// Slot range owned by node `i`.
    pub fn slots_of(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn slot(&self, from: usize, to: usize) -> Option<usize> {
        let range = self.slots_of(from);
        self.edges[range.clone()]
            .binary_search_by_key(&to, |e| e.to)
            .ok()
            .map(|pos| range.start + pos)
    }
}

/// Everything about an instance except the private data: topology, penalty
/// `c`, averaging constant `theta` and the constraint coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicParameters {
    graph: AugmentedGraph,
    c: f64,
    theta: f64,
    directed: DirectedEdges,
}

impl PublicParameters {
    pub fn new(graph: AugmentedGraph, c: f64, theta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c must be positive, got {c}"
            )));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1], got {theta}"
            )));
        }
        let directed = DirectedEdges::new(&graph);
        Ok(Self {
            graph,
            c,
            theta,
            directed,
        })
    }

    pub fn graph(&self) -> &AugmentedGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.regular_count()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn directed(&self) -> &DirectedEdges {
        &self.directed
    }

    /// `A_ij` for a regular edge, `None` if `(i, j)` is not an edge.
    pub fn coefficient(&self, i: usize, j: usize) -> Option<f64> {
        self.directed
            .slot(i, j)
            .map(|s| self.directed.get(s).coefficient)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    public: PublicParameters,
    s: Vec<f64>,
}

/// Builds the instance, fixing every coefficient and offset.
pub fn assemble(g: AugmentedGraph, s: Vec<f64>, c: f64, theta: f64) -> Result<ProblemInstance> {
    if s.len() != g.regular_count() {
        return Err(Error::DimensionMismatch {
            expected: g.regular_count(),
            found: s.len(),
        });
    }
    if let Some(v) = s.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite private value {v}"
        )));
    }
    Ok(ProblemInstance {
        public: PublicParameters::new(g, c, theta)?,
        s,
    })
}

impl ProblemInstance {
    pub fn public(&self) -> &PublicParameters {
        &self.public
    }

    pub fn graph(&self) -> &AugmentedGraph {
        self.public.graph()
    }

    pub fn node_count(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn c(&self) -> f64 {
        self.public.c
    }

    pub fn theta(&self) -> f64 {
        self.public.theta
    }

    /// `b_ij` of a regular edge.
    pub fn regular_offset(&self) -> f64 {
        0.0
    }

    /// `b_ii' = -s_i`.
    pub fn dummy_offset(&self, i: usize) -> f64 {
        -self.s[i]
    }

    /// The LP optimum: every coordinate equals the maximum private value.
    pub fn optimum(&self) -> f64 {
        solve_exact(&self.s).expect("instances have at least one node")
    }

    /// Node indices holding the maximum value.
    pub fn argmax(&self) -> Vec<usize> {
        let max = self.optimum();
        (0..self.s.len()).filter(|&i| self.s[i] == max).collect()
    }
}

/// Ground-truth maximum.
pub fn solve_exact(s: &[f64]) -> Result<f64> {
    s.iter().copied().reduce(f64::max).ok_or(Error::EmptyInput)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{augment, Graph};
    use alloc::vec;

    #[test]
    fn two_node_coefficients() {
        let p = assemble(augment(&Graph::complete(2)), vec![0.0, 1.0], 1.0, 0.5).unwrap();
        assert_eq!(p.public().coefficient(0, 1), Some(1.0));
        assert_eq!(p.public().coefficient(1, 0), Some(-1.0));
        assert_eq!(p.regular_offset(), 0.0);
        assert_eq!(p.dummy_offset(0), 0.0);
        assert_eq!(p.dummy_offset(1), -1.0);
    }

    #[test]
    fn dummy_constraint_is_lower_bound() {
        let p = assemble(augment(&Graph::path(3)), vec![0.3, -1.2, 2.5], 1.0, 0.5).unwrap();
        for i in 0..3 {
            for x in [-3.0, 0.3, 2.5, 4.0] {
                // A_ii' x + A_i'i x' <= b  <=>  x >= s_i, for any x'
                for x_dummy in [-100.0, 0.0, 100.0] {
                    let lhs = DUMMY_COEFFICIENT * x + DUMMY_SIDE_COEFFICIENT * x_dummy;
                    assert_eq!(lhs <= p.dummy_offset(i), x >= p.s()[i]);
                }
                // slack b - A x equals x - s_i
                assert_eq!(p.dummy_offset(i) - DUMMY_COEFFICIENT * x, x - p.s()[i]);
            }
        }
    }

    #[test]
    fn assemble_errors() {
        let g = augment(&Graph::path(2));
        assert_eq!(
            assemble(g.clone(), vec![1.0], 1.0, 0.5),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        assert!(matches!(
            assemble(g.clone(), vec![1.0, 2.0], 0.0, 0.5),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            assemble(g.clone(), vec![1.0, 2.0], 1.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            assemble(g, vec![1.0, 2.0], 1.0, 1.5),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn exact_maximum() {
        assert_eq!(solve_exact(&[0.0, 1.0]), Ok(1.0));
        assert_eq!(solve_exact(&[-3.0, -3.0]), Ok(-3.0));
        assert_eq!(solve_exact(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn directed_slots_are_consistent() {
        let g = Graph::new(4, [(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
        let p = PublicParameters::new(augment(&g), 1.0, 0.5).unwrap();
        let d = p.directed();
        assert_eq!(d.len(), 8);
        for (slot, e) in d.as_slice().iter().enumerate() {
            let r = d.get(e.reverse);
            assert_eq!((r.from, r.to), (e.to, e.from));
            assert_eq!(r.reverse, slot);
            assert_eq!(e.coefficient + r.coefficient, 0.0);
            assert_eq!(d.slot(e.from, e.to), Some(slot));
        }
        assert_eq!(d.slot(0, 3), None);
    }
}
