//! Online Boolean matrix-vector multiplication.
//!
//! The matrix is cut into a grid of square blocks, each owned by a
//! [`VmvState`]. A product query asks each block "is your contribution to
//! these output rows nonzero?" and recovers the positive rows one at a time
//! by binary search over the still-unresolved rows: if the first half of a
//! set answers 0, every 1 must sit in the second half, because block
//! answers are exact. Once an output row is known to be 1 it is dropped
//! from every later block query in its block row, so a query issues at most
//! `grid^2` misses plus about `log(block)` block queries per recovered 1.

use crate::bits::{BitMatrix, BitVector, IndexSet};
use crate::vmv::{Tuning, VmvParams, VmvState, VmvStats};
use crate::Error;

/// Query counters for the blocked engine.
#[derive(Clone, Debug, Default)]
pub struct OmvStats {
    /// Product queries answered.
    pub queries: u64,
    /// Block-level queries issued in total.
    pub block_queries: u64,
    /// Largest number of block-level queries a single product query issued.
    pub max_block_queries: u64,
}

/// Online matrix-vector engine over a fixed square matrix.
pub struct OmvState {
    n: usize,
    block_side: usize,
    grid_dim: usize,
    blocks: Vec<VmvState>,
    stats: OmvStats,
}

impl OmvState {
    /// Builds the engine with default tuning.
    pub fn new(matrix: &BitMatrix, seed: u64) -> Result<OmvState, Error> {
        OmvState::with_tuning(matrix, seed, &Tuning::default())
    }

    /// Builds the engine over `matrix`, cutting it into
    /// `ceil(sqrt n)`-sided blocks. Blocks on the ragged edge are padded
    /// with zero rows/columns, which never influence an answer. Each block
    /// engine draws its own seed from `seed`.
    pub fn with_tuning(matrix: &BitMatrix, seed: u64, tuning: &Tuning) -> Result<OmvState, Error> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Input(format!(
                "matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let n = matrix.rows();
        if n == 0 {
            return Err(Error::Config("matrix size must be positive".into()));
        }
        let mut block_side = (n as f64).sqrt().ceil() as usize;
        while block_side * block_side < n {
            block_side += 1;
        }
        let grid_dim = n.div_ceil(block_side);
        let mut blocks = Vec::with_capacity(grid_dim * grid_dim);
        for bi in 0..grid_dim {
            for bj in 0..grid_dim {
                let window = matrix.window(bi * block_side, bj * block_side, block_side, block_side);
                let params = VmvParams::derive(
                    block_side,
                    block_seed(seed, bi * grid_dim + bj),
                    tuning,
                );
                blocks.push(VmvState::new(window, params)?);
            }
        }
        Ok(OmvState {
            n,
            block_side,
            grid_dim,
            blocks,
            stats: OmvStats::default(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn block_side(&self) -> usize {
        self.block_side
    }

    pub fn grid_dim(&self) -> usize {
        self.grid_dim
    }

    /// The block engines, in (block row, block column) row-major order.
    pub fn blocks(&self) -> &[VmvState] {
        &self.blocks
    }

    pub fn stats(&self) -> &OmvStats {
        &self.stats
    }

    /// Sums the step counters of every block engine.
    pub fn aggregate_block_stats(&self) -> VmvStats {
        let mut total = VmvStats::default();
        for b in &self.blocks {
            total.absorb(b.stats());
        }
        total
    }

    /// The Boolean product `matrix * v`. Exact.
    pub fn query(&mut self, v: &BitVector) -> BitVector {
        assert_eq!(v.len(), self.n, "vector length mismatch");
        self.stats.queries += 1;
        let mut out = BitVector::zeros(self.n);
        let supports = column_supports(v, self.block_side, self.grid_dim);
        let mut issued = 0u64;
        for bi in 0..self.grid_dim {
            let grid = self.grid_dim;
            let blocks = &mut self.blocks;
            issued += recover_block_row(
                self.n,
                self.block_side,
                bi,
                &supports,
                |bj, rows, cols| blocks[bi * grid + bj].query(rows, cols),
                &mut out,
            );
        }
        self.stats.block_queries += issued;
        self.stats.max_block_queries = self.stats.max_block_queries.max(issued);
        out
    }
}

fn block_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Support of `v` inside each block column, reindexed to block-local
/// coordinates; `None` for all-zero block columns (their contribution is 0).
pub(crate) fn column_supports(
    v: &BitVector,
    block_side: usize,
    grid_dim: usize,
) -> Vec<Option<IndexSet>> {
    let n = v.len();
    (0..grid_dim)
        .map(|bj| {
            let lo = bj * block_side;
            let hi = ((bj + 1) * block_side).min(n);
            let s = IndexSet::from_indices(
                block_side,
                (lo..hi).filter(|&j| v.get(j)).map(|j| j - lo),
            );
            if s.is_empty() {
                None
            } else {
                Some(s)
            }
        })
        .collect()
}

/// Recovers the 1-rows of one block row of the product, issuing exact block
/// queries through `query` and setting global output bits in `out`. Returns
/// the number of block queries issued.
///
/// Loop shape: while some block column still has support and unresolved
/// rows remain, query all unresolved rows at once; on a 1, binary-search the
/// unresolved list for one positive row (querying the first half, inferring
/// the second half when the first answers 0 — sound because block answers
/// are exact), mark it, and drop it from the unresolved list.
pub(crate) fn recover_block_row(
    n: usize,
    block_side: usize,
    block_row: usize,
    supports: &[Option<IndexSet>],
    mut query: impl FnMut(usize, &IndexSet, &IndexSet) -> bool,
    out: &mut BitVector,
) -> u64 {
    let mut issued = 0u64;
    let mut unresolved: Vec<usize> = (0..block_side).collect();
    'block_columns: for (bj, support) in supports.iter().enumerate() {
        let Some(cols) = support else { continue };
        loop {
            if unresolved.is_empty() {
                break 'block_columns;
            }
            let whole = IndexSet::from_indices(block_side, unresolved.iter().copied());
            issued += 1;
            if !query(bj, &whole, cols) {
                break;
            }
            let (mut lo, mut hi) = (0usize, unresolved.len());
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let first_half =
                    IndexSet::from_indices(block_side, unresolved[lo..mid].iter().copied());
                issued += 1;
                if query(bj, &first_half, cols) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let local = unresolved.remove(lo);
            let global = block_row * block_side + local;
            assert!(global < n, "padding row reported a 1");
            out.set(global, true);
        }
    }
    issued
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::naive_matvec;
    use crate::workload;

    #[test]
    fn grid_shape_follows_matrix_size() {
        let st = OmvState::new(&BitMatrix::zeros(16, 16), 0).unwrap();
        assert_eq!(st.block_side(), 4);
        assert_eq!(st.grid_dim(), 4);
        assert_eq!(st.blocks().len(), 16);

        let st = OmvState::new(&BitMatrix::zeros(17, 17), 0).unwrap();
        assert_eq!(st.block_side(), 5);
        assert_eq!(st.grid_dim(), 4);
        assert_eq!(st.blocks().len(), 16);
    }

    #[test]
    fn blocks_hold_the_right_windows() {
        let m = workload::random_matrix(17, 17, 0.4, &mut workload::rng(30));
        let st = OmvState::new(&m, 1).unwrap();
        let b = st.block_side();
        for bi in 0..st.grid_dim() {
            for bj in 0..st.grid_dim() {
                let block = &st.blocks()[bi * st.grid_dim() + bj];
                for r in 0..b {
                    for c in 0..b {
                        let expected = if bi * b + r < 17 && bj * b + c < 17 {
                            m.get(bi * b + r, bj * b + c)
                        } else {
                            false
                        };
                        assert_eq!(block.matrix().get(r, c), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn identity_and_constant_matrices() {
        let mut st = OmvState::new(&BitMatrix::identity(20), 2).unwrap();
        let v = BitVector::from_indices(20, [0, 7, 19]);
        assert_eq!(st.query(&v), v);

        let mut st = OmvState::new(&BitMatrix::filled(20, 20), 3).unwrap();
        assert_eq!(st.query(&BitVector::zeros(20)), BitVector::zeros(20));
        assert_eq!(
            st.query(&BitVector::from_indices(20, [11])),
            BitVector::ones(20)
        );

        let mut st = OmvState::new(&BitMatrix::zeros(20, 20), 4).unwrap();
        assert_eq!(st.query(&BitVector::ones(20)), BitVector::zeros(20));
    }

    #[test]
    fn products_match_oracle_including_ragged_sizes() {
        for &(n, density) in &[(16usize, 0.5f64), (33, 0.1), (33, 0.9), (40, 0.02)] {
            let m = workload::random_matrix(n, n, density, &mut workload::rng(n as u64));
            let mut st = OmvState::new(&m, 5).unwrap();
            let mut rng = workload::rng(6);
            for v in workload::vector_sequence(n, workload::SequenceKind::Mixed, 120, &mut rng) {
                assert_eq!(st.query(&v), naive_matvec(&m, &v), "n = {n}");
            }
            for block in st.blocks() {
                block.check_invariants().unwrap();
            }
        }
    }

    #[test]
    fn block_query_accounting_stays_within_bound() {
        let n = 64;
        let m = workload::random_matrix(n, n, 0.3, &mut workload::rng(7));
        let mut st = OmvState::new(&m, 8).unwrap();
        let grid = st.grid_dim() as u64;
        let log_term = (st.block_side() as f64).log2().ceil() as u64 + 1;
        let mut rng = workload::rng(9);
        for v in workload::vector_sequence(n, workload::SequenceKind::Mixed, 200, &mut rng) {
            let before = st.stats().block_queries;
            let out = st.query(&v);
            let issued = st.stats().block_queries - before;
            let ones = out.count_ones() as u64;
            let bound = grid * grid + (ones + grid) * log_term * grid;
            assert!(
                issued <= bound,
                "issued {issued} block queries, bound {bound} (ones {ones})"
            );
        }
    }
}
