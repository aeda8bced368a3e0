//! Seeded generators for matrices, query streams, corpora, and formulas.
//!
//! All randomness in the crate flows through [`rng`], a counter-based stream
//! cipher generator, so every artifact and benchmark is reproducible from a
//! `u64` seed.

use crate::apps::cnf::{CnfFormula, Literal};
use crate::apps::pm::{PmCorpus, PmSymbol};
use crate::bits::{BitMatrix, BitVector, IndexSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide deterministic generator for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random matrix where each cell is 1 independently with probability
/// `density`.
pub fn random_matrix<R: Rng>(rows: usize, cols: usize, density: f64, rng: &mut R) -> BitMatrix {
    assert!((0.0..=1.0).contains(&density), "density must be in [0, 1]");
    let mut m = BitMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if rng.random_bool(density) {
                m.set(r, c, true);
            }
        }
    }
    m
}

/// Random vector where each bit is 1 independently with probability `density`.
pub fn random_bitvector<R: Rng>(len: usize, density: f64, rng: &mut R) -> BitVector {
    assert!((0.0..=1.0).contains(&density), "density must be in [0, 1]");
    let mut v = BitVector::zeros(len);
    for i in 0..len {
        if rng.random_bool(density) {
            v.set(i, true);
        }
    }
    v
}

/// Random subset of `{0, ..., universe-1}` with independent inclusion
/// probability `density`.
pub fn random_subset<R: Rng>(universe: usize, density: f64, rng: &mut R) -> IndexSet {
    IndexSet::from_bits(random_bitvector(universe, density, rng))
}

/// Random simple undirected graph: symmetric adjacency matrix with zero
/// diagonal, each edge present independently with probability `density`.
pub fn random_graph<R: Rng>(n: usize, density: f64, rng: &mut R) -> BitMatrix {
    assert!((0.0..=1.0).contains(&density), "density must be in [0, 1]");
    let mut adj = BitMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                adj.set(i, j, true);
                adj.set(j, i, true);
            }
        }
    }
    adj
}

/// Shapes of query streams used by verification and benchmarks.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SequenceKind {
    /// Independent half-density draws.
    Uniform,
    /// One uniform draw repeated for the whole stream.
    Repeated,
    /// Singleton rows/columns (for set queries) or standard basis vectors.
    Basis,
    /// Near-full draws that push the engines toward their dense paths.
    Dense,
    /// Cycles through the four shapes above.
    Mixed,
}

impl SequenceKind {
    /// Everything except `Mixed`.
    pub const BASE: [SequenceKind; 4] = [
        SequenceKind::Uniform,
        SequenceKind::Repeated,
        SequenceKind::Basis,
        SequenceKind::Dense,
    ];
}

const DENSE_INCLUSION: f64 = 0.9;

fn uniform_pair<R: Rng>(n: usize, rng: &mut R) -> (IndexSet, IndexSet) {
    (random_subset(n, 0.5, rng), random_subset(n, 0.5, rng))
}

fn dense_pair<R: Rng>(n: usize, rng: &mut R) -> (IndexSet, IndexSet) {
    (
        random_subset(n, DENSE_INCLUSION, rng),
        random_subset(n, DENSE_INCLUSION, rng),
    )
}

fn basis_pair<R: Rng>(n: usize, rng: &mut R) -> (IndexSet, IndexSet) {
    (
        IndexSet::from_indices(n, [rng.random_range(0..n)]),
        IndexSet::from_indices(n, [rng.random_range(0..n)]),
    )
}

/// A stream of `count` (row set, column set) query pairs over universe `n`.
pub fn set_pair_sequence<R: Rng>(
    n: usize,
    kind: SequenceKind,
    count: usize,
    rng: &mut R,
) -> Vec<(IndexSet, IndexSet)> {
    assert!(n > 0, "universe must be nonempty");
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let pick = match kind {
            SequenceKind::Mixed => SequenceKind::BASE[i % SequenceKind::BASE.len()],
            k => k,
        };
        let pair = match pick {
            SequenceKind::Uniform => uniform_pair(n, rng),
            SequenceKind::Dense => dense_pair(n, rng),
            SequenceKind::Basis => basis_pair(n, rng),
            SequenceKind::Repeated => match out.last() {
                Some(prev) => {
                    let p: &(IndexSet, IndexSet) = prev;
                    p.clone()
                }
                None => uniform_pair(n, rng),
            },
            SequenceKind::Mixed => unreachable!(),
        };
        out.push(pair);
    }
    out
}

/// A stream of `count` query vectors of length `n`.
pub fn vector_sequence<R: Rng>(
    n: usize,
    kind: SequenceKind,
    count: usize,
    rng: &mut R,
) -> Vec<BitVector> {
    assert!(n > 0, "vector length must be positive");
    let mut out: Vec<BitVector> = Vec::with_capacity(count);
    for i in 0..count {
        let pick = match kind {
            SequenceKind::Mixed => SequenceKind::BASE[i % SequenceKind::BASE.len()],
            k => k,
        };
        let v = match pick {
            SequenceKind::Uniform => random_bitvector(n, 0.5, rng),
            SequenceKind::Dense => random_bitvector(n, DENSE_INCLUSION, rng),
            SequenceKind::Basis => BitVector::from_indices(n, [rng.random_range(0..n)]),
            SequenceKind::Repeated => match out.last() {
                Some(prev) => prev.clone(),
                None => random_bitvector(n, 0.5, rng),
            },
            SequenceKind::Mixed => unreachable!(),
        };
        out.push(v);
    }
    out
}

/// Random 2-CNF formula over `vars` variables with `clauses` clauses.
/// Repeated literals within a clause are allowed (unit clauses in disguise).
pub fn random_cnf<R: Rng>(vars: usize, clauses: usize, rng: &mut R) -> CnfFormula {
    assert!(vars > 0, "formula needs at least one variable");
    let mut lits = Vec::with_capacity(clauses);
    let lit = |rng: &mut R| Literal {
        var: rng.random_range(0..vars),
        positive: rng.random_bool(0.5),
    };
    for _ in 0..clauses {
        let a = lit(rng);
        let b = lit(rng);
        lits.push((a, b));
    }
    CnfFormula {
        vars,
        clauses: lits,
    }
}

fn random_symbol<R: Rng>(k: u32, star_prob: f64, rng: &mut R) -> PmSymbol {
    if rng.random_bool(star_prob) {
        None
    } else {
        Some(rng.random_range(0..k))
    }
}

/// Random corpus of `n` strings of length `m` over alphabet `{0, ..., k-1}`,
/// each position independently a wildcard with probability `star_prob`.
pub fn random_corpus<R: Rng>(
    n: usize,
    m: usize,
    k: u32,
    star_prob: f64,
    rng: &mut R,
) -> PmCorpus {
    assert!(k >= 1, "alphabet must be nonempty");
    assert!((0.0..=1.0).contains(&star_prob), "star probability must be in [0, 1]");
    let strings = (0..n)
        .map(|_| (0..m).map(|_| random_symbol(k, star_prob, rng)).collect())
        .collect();
    PmCorpus {
        length: m,
        alphabet: k,
        strings,
    }
}

/// Random partial-match query of length `m` over alphabet `{0, ..., k-1}`.
pub fn random_pm_query<R: Rng>(m: usize, k: u32, star_prob: f64, rng: &mut R) -> Vec<PmSymbol> {
    (0..m).map(|_| random_symbol(k, star_prob, rng)).collect()
}
