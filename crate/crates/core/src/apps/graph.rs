//! Graph set queries and per-vertex triangle queries.
//!
//! All four query kinds reduce to one matrix-vector product against the
//! adjacency matrix plus word-parallel postprocessing:
//!
//! * `S` is independent iff `(A 1_S) AND 1_S = 0`;
//! * `S` is dominating iff `(A 1_S) OR 1_S` is all ones;
//! * `S` is a vertex cover iff its complement is independent;
//! * `v` lies on a triangle iff its neighborhood is *not* independent.

use crate::bits::{BitMatrix, IndexSet};
use crate::omv::OmvState;
use crate::Error;

/// The three set-query predicates.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SetQueryMode {
    Independent,
    Dominating,
    VertexCover,
}

/// A simple undirected graph plus the product engine over its adjacency
/// matrix.
pub struct GraphHandle {
    adjacency: BitMatrix,
    engine: OmvState,
}

impl GraphHandle {
    /// Wraps an adjacency matrix. It must be square, symmetric, and have an
    /// empty diagonal (simple graph).
    pub fn new(adjacency: BitMatrix, seed: u64) -> Result<GraphHandle, Error> {
        let n = adjacency.rows();
        if adjacency.cols() != n {
            return Err(Error::Input(format!(
                "adjacency matrix must be square, got {}x{}",
                n,
                adjacency.cols()
            )));
        }
        for i in 0..n {
            if adjacency.get(i, i) {
                return Err(Error::Input(format!("self-loop at vertex {i}")));
            }
            for j in i + 1..n {
                if adjacency.get(i, j) != adjacency.get(j, i) {
                    return Err(Error::Input(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let engine = OmvState::new(&adjacency, seed)?;
        Ok(GraphHandle { adjacency, engine })
    }

    /// Builds the graph from an edge list over `n` vertices.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], seed: u64) -> Result<GraphHandle, Error> {
        let mut adjacency = BitMatrix::zeros(n, n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Input(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::Input(format!("self-loop at vertex {a}")));
            }
            adjacency.set(a, b, true);
            adjacency.set(b, a, true);
        }
        GraphHandle::new(adjacency, seed)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn adjacency(&self) -> &BitMatrix {
        &self.adjacency
    }

    /// Statistics of the underlying product engine.
    pub fn engine(&self) -> &OmvState {
        &self.engine
    }

    /// Decides the chosen predicate for vertex set `s`. Exact.
    pub fn set_query(&mut self, s: &IndexSet, mode: SetQueryMode) -> bool {
        assert_eq!(s.universe(), self.vertex_count(), "vertex set universe mismatch");
        match mode {
            SetQueryMode::Independent => {
                let reached = self.engine.query(s.bits());
                !reached.intersects(s.bits())
            }
            SetQueryMode::Dominating => {
                let mut covered = self.engine.query(s.bits());
                covered.or_assign(s.bits());
                covered.is_all_ones()
            }
            SetQueryMode::VertexCover => {
                let outside = s.complement();
                let reached = self.engine.query(outside.bits());
                !reached.intersects(outside.bits())
            }
        }
    }

    /// True when vertex `v` lies on a triangle: its neighborhood spans an
    /// edge. Exact.
    pub fn triangle_query(&mut self, v: usize) -> bool {
        assert!(v < self.vertex_count(), "vertex out of range");
        let neighborhood = IndexSet::from_bits(self.adjacency.row_vector(v));
        !self.set_query(&neighborhood, SetQueryMode::Independent)
    }
}
