//! Reference implementations used as correctness oracles and baselines.
//!
//! Everything here is written as plain index loops over individual cells,
//! on purpose: these functions must not share logic with the engines they
//! validate. `word_parallel_matvec` is the one exception — it is the
//! word-packed baseline that benchmarks compare against, and it is itself
//! validated against `naive_matvec`.

use crate::apps::cnf::CnfFormula;
use crate::apps::pm::{PmCorpus, PmSymbol};
use crate::bits::{BitMatrix, BitVector, IndexSet};

/// Boolean matrix-vector product by full scan: `out[i] = OR_j m[i][j] AND v[j]`.
///
/// Scans every cell with no early exit; this is the quadratic baseline the
/// engines are measured against.
pub fn naive_matvec(m: &BitMatrix, v: &BitVector) -> BitVector {
    assert_eq!(v.len(), m.cols(), "vector length mismatch");
    let mut out = BitVector::zeros(m.rows());
    for i in 0..m.rows() {
        let mut acc = false;
        for j in 0..m.cols() {
            acc |= m.get(i, j) && v.get(j);
        }
        if acc {
            out.set(i, true);
        }
    }
    out
}

/// Boolean matrix-vector product using word-parallel row masking.
pub fn word_parallel_matvec(m: &BitMatrix, v: &BitVector) -> BitVector {
    assert_eq!(v.len(), m.cols(), "vector length mismatch");
    let mut out = BitVector::zeros(m.rows());
    for i in 0..m.rows() {
        if m.row_intersects(i, v) {
            out.set(i, true);
        }
    }
    out
}

/// True when the `rows x cols` submatrix of `m` contains a 1, by cell scan
/// with early exit on the first hit.
pub fn naive_vmv(m: &BitMatrix, rows: &IndexSet, cols: &IndexSet) -> bool {
    assert_eq!(rows.universe(), m.rows(), "row set universe mismatch");
    assert_eq!(cols.universe(), m.cols(), "column set universe mismatch");
    for i in 0..m.rows() {
        if !rows.contains(i) {
            continue;
        }
        for j in 0..m.cols() {
            if cols.contains(j) && m.get(i, j) {
                return true;
            }
        }
    }
    false
}

/// Edge-scan oracle: no edge of `adjacency` has both endpoints in `s`.
pub fn independent_set_scan(adjacency: &BitMatrix, s: &IndexSet) -> bool {
    let n = adjacency.rows();
    for i in 0..n {
        for j in 0..n {
            if adjacency.get(i, j) && s.contains(i) && s.contains(j) {
                return false;
            }
        }
    }
    true
}

/// Edge-scan oracle: every vertex is in `s` or adjacent to a member of `s`.
pub fn dominating_set_scan(adjacency: &BitMatrix, s: &IndexSet) -> bool {
    let n = adjacency.rows();
    'outer: for v in 0..n {
        if s.contains(v) {
            continue;
        }
        for u in 0..n {
            if s.contains(u) && adjacency.get(v, u) {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Edge-scan oracle: every edge has at least one endpoint in `s`.
pub fn vertex_cover_scan(adjacency: &BitMatrix, s: &IndexSet) -> bool {
    let n = adjacency.rows();
    for i in 0..n {
        for j in 0..n {
            if adjacency.get(i, j) && !s.contains(i) && !s.contains(j) {
                return false;
            }
        }
    }
    true
}

/// Triple-loop oracle: vertex `v` lies on a triangle of `adjacency`.
pub fn triangle_scan(adjacency: &BitMatrix, v: usize) -> bool {
    let n = adjacency.rows();
    assert!(v < n, "vertex out of range");
    for a in 0..n {
        if !adjacency.get(v, a) {
            continue;
        }
        for b in 0..n {
            if adjacency.get(v, b) && adjacency.get(a, b) {
                return true;
            }
        }
    }
    false
}

/// Clause-loop oracle: evaluates a 2-CNF formula under an assignment
/// (`assignment[i]` is the value of variable `i`).
pub fn cnf_clause_scan(formula: &CnfFormula, assignment: &BitVector) -> bool {
    assert_eq!(assignment.len(), formula.vars, "assignment length mismatch");
    formula.clauses.iter().all(|&(a, b)| {
        let va = assignment.get(a.var) == a.positive;
        let vb = assignment.get(b.var) == b.positive;
        va || vb
    })
}

/// Position-loop oracle for partial match: `out[i] = 1` iff string `i` of the
/// corpus agrees with `query` at every position where both are non-wildcard.
pub fn pm_match_scan(corpus: &PmCorpus, query: &[PmSymbol]) -> BitVector {
    assert_eq!(query.len(), corpus.length, "query length mismatch");
    let mut out = BitVector::zeros(corpus.strings.len());
    for (i, s) in corpus.strings.iter().enumerate() {
        let ok = s.iter().zip(query).all(|(&a, &b)| match (a, b) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        });
        if ok {
            out.set(i, true);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn naive_matvec_examples() {
        let id = BitMatrix::identity(5);
        let v = BitVector::from_indices(5, [1, 4]);
        assert_eq!(naive_matvec(&id, &v), v);

        let ones = BitMatrix::filled(3, 3);
        let nonzero = BitVector::from_indices(3, [2]);
        assert_eq!(naive_matvec(&ones, &nonzero), BitVector::ones(3));
        assert_eq!(naive_matvec(&ones, &BitVector::zeros(3)), BitVector::zeros(3));
    }

    #[test]
    fn word_parallel_matches_naive_exhaustively_small() {
        // Every (matrix, vector) pair up to 3x3, then every vector against
        // sampled matrices up to 6x6.
        for n in 1..=3usize {
            for m_bits in 0..1u32 << (n * n) {
                let mut m = BitMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        if m_bits >> (i * n + j) & 1 == 1 {
                            m.set(i, j, true);
                        }
                    }
                }
                for v_bits in 0..1u32 << n {
                    let v = BitVector::from_indices(n, (0..n).filter(|&j| v_bits >> j & 1 == 1));
                    assert_eq!(word_parallel_matvec(&m, &v), naive_matvec(&m, &v));
                }
            }
        }
        let mut rng = workload::rng(11);
        for n in 4..=6usize {
            for _ in 0..50 {
                let m = workload::random_matrix(n, n, 0.4, &mut rng);
                for v_bits in 0..1u32 << n {
                    let v = BitVector::from_indices(n, (0..n).filter(|&j| v_bits >> j & 1 == 1));
                    assert_eq!(word_parallel_matvec(&m, &v), naive_matvec(&m, &v));
                }
            }
        }
    }

    #[test]
    fn word_parallel_matches_naive_on_wide_random_inputs() {
        let mut rng = workload::rng(12);
        for _ in 0..200 {
            let rows = rng.random_range(1..40);
            let cols = rng.random_range(1..200);
            let m = workload::random_matrix(rows, cols, 0.1, &mut rng);
            let v = workload::random_bitvector(cols, 0.3, &mut rng);
            assert_eq!(word_parallel_matvec(&m, &v), naive_matvec(&m, &v));
        }
    }

    #[test]
    fn naive_vmv_examples() {
        let id = BitMatrix::identity(2);
        let zero = IndexSet::from_indices(2, [0]);
        let one = IndexSet::from_indices(2, [1]);
        assert!(naive_vmv(&id, &zero, &zero));
        assert!(!naive_vmv(&id, &zero, &one));
        assert!(!naive_vmv(&id, &IndexSet::empty(2), &IndexSet::full(2)));
    }

    proptest! {
        #[test]
        fn naive_vmv_matches_membership_definition(
            seed in any::<u64>(),
            rows_mask in any::<u32>(),
            cols_mask in any::<u32>(),
        ) {
            let mut rng = workload::rng(seed);
            let m = workload::random_matrix(32, 32, 0.15, &mut rng);
            let rows = IndexSet::from_mask(32, rows_mask as u64);
            let cols = IndexSet::from_mask(32, cols_mask as u64);
            let expected = rows.members().iter().any(|&i| {
                cols.members().iter().any(|&j| m.get(i, j))
            });
            prop_assert_eq!(naive_vmv(&m, &rows, &cols), expected);
        }
    }
}
