//! Orthogonal-pair listing over the extracted-rectangle structure.
//!
//! The core engine ([`crate::vmv`]) maintains a list of rectangles it has
//! brute-forced. Each row index `i` gets a *side vector* whose `k`-th bit
//! says whether rectangle `k` contains row `i`, and symmetrically for
//! columns. A cell `(i, j)` is covered by some rectangle exactly when the
//! two side vectors share a coordinate, so the *uncovered* cells of a query
//! rectangle are the orthogonal pairs among its side vectors. Listing them
//! in groups gives the engine its subquadratic query path: one word-parallel
//! check per group pair, and cell-level enumeration only inside group pairs
//! known to contain an orthogonal pair.

use crate::bits::{BitMatrix, BitVector, IndexSet};

/// Per-row and per-column rectangle-membership vectors.
///
/// Vectors are allocated at a fixed capacity up front so that registering a
/// rectangle is a single bit per touched index; coordinates past
/// [`SideVectors::dim`] are zero and never affect intersection tests.
#[derive(Clone, Debug)]
pub struct SideVectors {
    universe: usize,
    capacity: usize,
    dim: usize,
    row_vectors: Vec<BitVector>,
    col_vectors: Vec<BitVector>,
}

impl SideVectors {
    /// Side vectors for `universe` row/column indices and at most
    /// `capacity` rectangles, initially containing none.
    pub fn with_capacity(universe: usize, capacity: usize) -> Self {
        SideVectors {
            universe,
            capacity,
            dim: 0,
            row_vectors: vec![BitVector::zeros(capacity); universe],
            col_vectors: vec![BitVector::zeros(capacity); universe],
        }
    }

    /// Builds side vectors from a fixed rectangle list.
    pub fn from_rectangles<'a, I>(universe: usize, rectangles: I) -> Self
    where
        I: IntoIterator<Item = (&'a IndexSet, &'a IndexSet)>,
    {
        let rects: Vec<_> = rectangles.into_iter().collect();
        let mut side = SideVectors::with_capacity(universe, rects.len());
        for (rows, cols) in rects {
            side.push_rectangle(rows, cols);
        }
        side
    }

    /// Registers the next rectangle. Panics if the capacity is exhausted —
    /// the engine sizes the capacity to its extraction budget, so running
    /// out is a bug.
    pub fn push_rectangle(&mut self, rows: &IndexSet, cols: &IndexSet) {
        assert!(self.dim < self.capacity, "side vector capacity exhausted");
        assert_eq!(rows.universe(), self.universe, "row set universe mismatch");
        assert_eq!(cols.universe(), self.universe, "column set universe mismatch");
        for i in rows.iter() {
            self.row_vectors[i].set(self.dim, true);
        }
        for j in cols.iter() {
            self.col_vectors[j].set(self.dim, true);
        }
        self.dim += 1;
    }

    /// Number of rectangles registered so far.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Membership vector of row `i`: bit `k` says rectangle `k` contains `i`.
    pub fn row_vector(&self, i: usize) -> &BitVector {
        &self.row_vectors[i]
    }

    /// Membership vector of column `j`.
    pub fn col_vector(&self, j: usize) -> &BitVector {
        &self.col_vectors[j]
    }
}

/// True when some (row, column) pair across the two groups is orthogonal,
/// i.e. shares no rectangle. One word-parallel intersection test per pair.
pub fn detect_group_pair(row_group: &[&BitVector], col_group: &[&BitVector]) -> bool {
    row_group
        .iter()
        .any(|u| col_group.iter().any(|v| !u.intersects(v)))
}

/// A listing instance: side vectors, the uncovered-cell indicator, and the
/// query rectangle.
///
/// Precondition (asserted in debug builds cell by cell): `unseen[i][j] == 1`
/// exactly when the side vectors of `i` and `j` are orthogonal. The engine
/// maintains this; standalone users must establish it themselves.
pub struct OvInstance<'a> {
    pub side: &'a SideVectors,
    pub unseen: &'a BitMatrix,
    pub rows: &'a IndexSet,
    pub cols: &'a IndexSet,
    /// Rows/columns are processed in groups of this size (at least 1).
    pub group_size: usize,
}

/// Lists every orthogonal (row, column) pair of the query rectangle.
///
/// Group pairs with no orthogonal pair are dismissed by a single detection
/// pass; the rest are enumerated cell by cell through the uncovered-cell
/// indicator. Output order is deterministic: group pairs in (row group,
/// column group) order, cells in row-major order within a group pair.
pub fn list_orthogonal_pairs(instance: &OvInstance) -> Vec<(usize, usize)> {
    let OvInstance {
        side,
        unseen,
        rows,
        cols,
        group_size,
    } = *instance;
    assert!(group_size >= 1, "group size must be at least 1");
    assert_eq!(rows.universe(), side.universe(), "row set universe mismatch");
    assert_eq!(cols.universe(), side.universe(), "column set universe mismatch");
    assert_eq!(unseen.rows(), side.universe(), "indicator shape mismatch");
    assert_eq!(unseen.cols(), side.universe(), "indicator shape mismatch");

    let row_members = rows.members();
    let col_members = cols.members();
    let col_groups: Vec<&[usize]> = col_members.chunks(group_size).collect();

    let mut pairs = Vec::new();
    for row_group in row_members.chunks(group_size) {
        let row_vecs: Vec<&BitVector> = row_group.iter().map(|&i| side.row_vector(i)).collect();
        for col_group in &col_groups {
            let col_vecs: Vec<&BitVector> = col_group.iter().map(|&j| side.col_vector(j)).collect();
            if !detect_group_pair(&row_vecs, &col_vecs) {
                continue;
            }
            for &i in row_group {
                for &j in *col_group {
                    debug_assert_eq!(
                        unseen.get(i, j),
                        !side.row_vector(i).intersects(side.col_vector(j)),
                        "uncovered indicator out of sync with side vectors at ({i}, {j})"
                    );
                    if unseen.get(i, j) {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::BTreeSet;

    /// Set-difference oracle: pairs of the rectangle covered by no listed
    /// rectangle.
    fn uncovered_pairs_oracle(
        n: usize,
        rects: &[(IndexSet, IndexSet)],
        rows: &IndexSet,
        cols: &IndexSet,
    ) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if !rows.contains(i) || !cols.contains(j) {
                    continue;
                }
                let covered = rects
                    .iter()
                    .any(|(u, v)| u.contains(i) && v.contains(j));
                if !covered {
                    out.insert((i, j));
                }
            }
        }
        out
    }

    fn indicator_for(n: usize, rects: &[(IndexSet, IndexSet)]) -> BitMatrix {
        let mut d = BitMatrix::filled(n, n);
        for (u, v) in rects {
            crate::bits::zero_rectangle(&mut d, u, v);
        }
        d
    }

    fn list_with(
        n: usize,
        rects: &[(IndexSet, IndexSet)],
        rows: &IndexSet,
        cols: &IndexSet,
        group_size: usize,
    ) -> Vec<(usize, usize)> {
        let side = SideVectors::from_rectangles(n, rects.iter().map(|(u, v)| (u, v)));
        let unseen = indicator_for(n, rects);
        list_orthogonal_pairs(&OvInstance {
            side: &side,
            unseen: &unseen,
            rows: &rows.clone(),
            cols: &cols.clone(),
            group_size,
        })
    }

    #[test]
    fn side_vectors_record_membership() {
        let rects = vec![(
            IndexSet::from_indices(2, [0]),
            IndexSet::from_indices(2, [1]),
        )];
        let side = SideVectors::from_rectangles(2, rects.iter().map(|(u, v)| (u, v)));
        assert_eq!(side.dim(), 1);
        assert!(side.row_vector(0).get(0));
        assert!(!side.row_vector(1).get(0));
        assert!(!side.col_vector(0).get(0));
        assert!(side.col_vector(1).get(0));
    }

    #[test]
    fn side_vectors_match_membership_on_random_rectangles() {
        let mut rng = workload::rng(21);
        let n = 64;
        let rects: Vec<_> = (0..5)
            .map(|_| {
                (
                    workload::random_subset(n, 0.3, &mut rng),
                    workload::random_subset(n, 0.3, &mut rng),
                )
            })
            .collect();
        let side = SideVectors::from_rectangles(n, rects.iter().map(|(u, v)| (u, v)));
        for i in 0..n {
            for (k, (u, v)) in rects.iter().enumerate() {
                assert_eq!(side.row_vector(i).get(k), u.contains(i));
                assert_eq!(side.col_vector(i).get(k), v.contains(i));
            }
        }
    }

    #[test]
    fn empty_structure_lists_whole_rectangle() {
        let n = 6;
        let rows = IndexSet::from_indices(n, [1, 4]);
        let cols = IndexSet::from_indices(n, [0, 5]);
        let listed = list_with(n, &[], &rows, &cols, 2);
        assert_eq!(listed.len(), 4);
        let expected = uncovered_pairs_oracle(n, &[], &rows, &cols);
        assert_eq!(listed.into_iter().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn fully_covered_rectangle_lists_nothing() {
        let n = 8;
        let rects = vec![(IndexSet::full(n), IndexSet::full(n))];
        let rows = IndexSet::from_indices(n, [0, 3, 7]);
        let cols = IndexSet::from_indices(n, [2, 4]);
        assert!(list_with(n, &rects, &rows, &cols, 3).is_empty());
    }

    #[test]
    fn detect_examples() {
        let a = BitVector::from_bits(&[true, true]);
        let b = BitVector::from_bits(&[true, false]);
        let c = BitVector::from_bits(&[false, true]);
        assert!(!detect_group_pair(&[&a], &[&a]));
        assert!(detect_group_pair(&[&b], &[&c]));
        assert!(detect_group_pair(&[&a, &b], &[&c]));
    }

    #[test]
    fn listing_matches_oracle_on_random_structures() {
        let mut rng = workload::rng(33);
        let n = 128;
        for round in 0..20 {
            let rects: Vec<_> = (0..3)
                .map(|_| {
                    (
                        workload::random_subset(n, 0.4, &mut rng),
                        workload::random_subset(n, 0.4, &mut rng),
                    )
                })
                .collect();
            let rows = workload::random_subset(n, 0.5, &mut rng);
            let cols = workload::random_subset(n, 0.5, &mut rng);
            let group_size = 1 + round % 9;
            let listed = list_with(n, &rects, &rows, &cols, group_size);
            let expected = uncovered_pairs_oracle(n, &rects, &rows, &cols);
            assert_eq!(listed.len(), expected.len(), "duplicates or misses");
            assert_eq!(listed.into_iter().collect::<BTreeSet<_>>(), expected);
        }
    }

    #[test]
    fn listing_is_exhaustive_on_small_universes() {
        // Every rectangle pair over n = 4 against every 1- and 2-rectangle
        // structure drawn from a fixed pool.
        let n = 4;
        let pool: Vec<(IndexSet, IndexSet)> = vec![
            (IndexSet::from_mask(n, 0b0011), IndexSet::from_mask(n, 0b1100)),
            (IndexSet::from_mask(n, 0b1010), IndexSet::from_mask(n, 0b0101)),
            (IndexSet::from_mask(n, 0b1111), IndexSet::from_mask(n, 0b0001)),
            (IndexSet::empty(n), IndexSet::full(n)),
        ];
        let mut structures: Vec<Vec<(IndexSet, IndexSet)>> = vec![vec![]];
        for a in 0..pool.len() {
            structures.push(vec![pool[a].clone()]);
            for b in 0..pool.len() {
                structures.push(vec![pool[a].clone(), pool[b].clone()]);
            }
        }
        for rects in &structures {
            for rows_mask in 0..1u64 << n {
                for cols_mask in 0..1u64 << n {
                    let rows = IndexSet::from_mask(n, rows_mask);
                    let cols = IndexSet::from_mask(n, cols_mask);
                    for group_size in 1..=n + 1 {
                        let listed = list_with(n, rects, &rows, &cols, group_size);
                        let expected = uncovered_pairs_oracle(n, rects, &rows, &cols);
                        assert_eq!(listed.len(), expected.len());
                        assert_eq!(
                            listed.iter().copied().collect::<BTreeSet<_>>(),
                            expected
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn detect_matches_pairwise_scan(
            seed in any::<u64>(),
            rows in 1usize..9,
            cols in 1usize..9,
            dim in 0usize..24,
        ) {
            let mut rng = workload::rng(seed);
            let us: Vec<BitVector> = (0..rows)
                .map(|_| workload::random_bitvector(dim, 0.5, &mut rng))
                .collect();
            let vs: Vec<BitVector> = (0..cols)
                .map(|_| workload::random_bitvector(dim, 0.5, &mut rng))
                .collect();
            let u_refs: Vec<&BitVector> = us.iter().collect();
            let v_refs: Vec<&BitVector> = vs.iter().collect();
            let expected = us.iter().any(|u| vs.iter().any(|v| {
                (0..dim).all(|k| !(u.get(k) && v.get(k)))
            }));
            prop_assert_eq!(detect_group_pair(&u_refs, &v_refs), expected);
        }

        #[test]
        fn listing_matches_oracle_prop(
            seed in any::<u64>(),
            n in 2usize..32,
            rect_count in 0usize..4,
            group_size in 1usize..8,
        ) {
            let mut rng = workload::rng(seed);
            let rects: Vec<_> = (0..rect_count)
                .map(|_| {
                    let d = rng.random_range(0.1..0.9);
                    (
                        workload::random_subset(n, d, &mut rng),
                        workload::random_subset(n, d, &mut rng),
                    )
                })
                .collect();
            let rows = workload::random_subset(n, 0.6, &mut rng);
            let cols = workload::random_subset(n, 0.6, &mut rng);
            let listed = list_with(n, &rects, &rows, &cols, group_size);
            let expected = uncovered_pairs_oracle(n, &rects, &rows, &cols);
            prop_assert_eq!(listed.len(), expected.len());
            prop_assert_eq!(listed.into_iter().collect::<BTreeSet<_>>(), expected);
        }
    }
}
