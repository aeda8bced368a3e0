//! Probe-accounting simulator and worst-case-time variants.
//!
//! Two small-instance laboratories live here:
//!
//! * A memory-probe cost model for the query problem. Preprocessing greedily
//!   collects all-zero rectangles that each newly cover at least
//!   `n^1.5 / sqrt(w)` cells, where `w` is the machine word size in bits.
//!   A query pays to read the rectangle list plus one probe per uncovered
//!   cell it must check; once the uncovered mass reaches the threshold the
//!   answer is 1 for free, because a rectangle that large and all zero
//!   would have been collected. Computation is free in this model — only
//!   memory probes are charged.
//! * A worst-case-time variant of the core engine: preprocessing runs the
//!   brute-force recording step exhaustively ahead of time, so queries can
//!   answer 0 instead of ever scanning. Answers are then correct with high
//!   probability instead of always.
//!
//! Both are exhaustive-search constructions, deliberately restricted to
//! small sides ([`MAX_SIDE`]).

use crate::bits::{BitMatrix, BitVector, IndexSet};
use crate::omv::{column_supports, recover_block_row};
use crate::vmv::{Tuning, VmvParams, VmvState};
use crate::workload;
use crate::Error;
use rand::Rng;

/// Side limit for the exhaustive constructions.
pub const MAX_SIDE: usize = 12;

/// Probe threshold of the cost model: `n^1.5 / sqrt(word_bits)`.
pub fn probe_threshold(n: usize, word_bits: usize) -> f64 {
    assert!(word_bits >= 1, "word size must be positive");
    (n as f64).powf(1.5) / (word_bits as f64).sqrt()
}

/// Memory-probe meter. Counts cell probes charged by the simulator;
/// reading one rectangle of the list costs `ceil(2n / word_bits)` probes
/// (two `n`-bit sets), and can be excluded to isolate entry probes.
#[derive(Clone, Debug)]
pub struct ProbeLedger {
    word_bits: usize,
    include_list_reads: bool,
    probes: u64,
}

impl ProbeLedger {
    pub fn new(word_bits: usize) -> ProbeLedger {
        ProbeLedger::with_policy(word_bits, true)
    }

    pub fn with_policy(word_bits: usize, include_list_reads: bool) -> ProbeLedger {
        assert!(word_bits >= 1, "word size must be positive");
        ProbeLedger {
            word_bits,
            include_list_reads,
            probes: 0,
        }
    }

    pub fn word_bits(&self) -> usize {
        self.word_bits
    }

    pub fn include_list_reads(&self) -> bool {
        self.include_list_reads
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub fn reset(&mut self) {
        self.probes = 0;
    }

    fn charge(&mut self, probes: u64) {
        self.probes += probes;
    }
}

/// The preprocessed structure of the cost model: greedily collected
/// all-zero rectangles and the cells they cover.
pub struct ZeroRectList {
    n: usize,
    word_bits: usize,
    rects: Vec<(IndexSet, IndexSet)>,
    coverage: BitMatrix,
}

impl ZeroRectList {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn word_bits(&self) -> usize {
        self.word_bits
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn rects(&self) -> &[(IndexSet, IndexSet)] {
        &self.rects
    }

    /// Indicator of cells covered by some collected rectangle.
    pub fn coverage(&self) -> &BitMatrix {
        &self.coverage
    }
}

/// Greedy all-zero rectangle collection.
///
/// Rounds pick the rectangle with the most newly covered cells; rounds stop
/// when no all-zero rectangle reaches the probe threshold. Ties break to
/// the lexicographically smallest `(rows, cols)` pair, sets compared as
/// ascending-bitmask integers. The column side never needs searching: for a
/// fixed row set the best column set is every column that is zero on all
/// chosen rows, trimmed to the columns actually contributing new cells
/// (which is also the smallest tied mask).
pub fn cp_preprocess(matrix: &BitMatrix, word_bits: usize) -> Result<ZeroRectList, Error> {
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
    if n > MAX_SIDE {
        return Err(Error::Scale(format!(
            "rectangle collection is exhaustive and limited to n <= {MAX_SIDE}, got {n}"
        )));
    }
    if word_bits == 0 {
        return Err(Error::Config("word size must be positive".into()));
    }

    let full_mask = (1u64 << n) - 1;
    let matrix_rows: Vec<u64> = (0..n).map(|i| matrix.row_words(i)[0]).collect();
    let mut covered_rows = vec![0u64; n];
    let threshold = probe_threshold(n, word_bits);
    let mut rects = Vec::new();

    loop {
        let mut best_gain = 0usize;
        let mut best: Option<(u64, u64)> = None;
        for row_mask in 1..=full_mask {
            // Columns that are zero on every chosen row.
            let mut zero_cols = full_mask;
            let mut probe = row_mask;
            while probe != 0 {
                let i = probe.trailing_zeros() as usize;
                zero_cols &= !matrix_rows[i];
                probe &= probe - 1;
            }
            if zero_cols == 0 {
                continue;
            }
            let mut gain = 0usize;
            let mut contributing = 0u64;
            let mut probe = row_mask;
            while probe != 0 {
                let i = probe.trailing_zeros() as usize;
                let fresh = zero_cols & !covered_rows[i];
                gain += fresh.count_ones() as usize;
                contributing |= fresh;
                probe &= probe - 1;
            }
            if gain > best_gain {
                best_gain = gain;
                best = Some((row_mask, contributing));
            }
        }
        if (best_gain as f64) < threshold || best_gain == 0 {
            break;
        }
        let (row_mask, col_mask) = best.expect("positive gain implies a candidate");
        let mut probe = row_mask;
        while probe != 0 {
            let i = probe.trailing_zeros() as usize;
            covered_rows[i] |= col_mask;
            probe &= probe - 1;
        }
        rects.push((
            IndexSet::from_mask(n, row_mask),
            IndexSet::from_mask(n, col_mask),
        ));
    }

    let mut coverage = BitMatrix::zeros(n, n);
    for (i, &row) in covered_rows.iter().enumerate() {
        for j in 0..n {
            if row >> j & 1 == 1 {
                coverage.set(i, j, true);
            }
        }
    }
    Ok(ZeroRectList {
        n,
        word_bits,
        rects,
        coverage,
    })
}

/// One query under the cost model. Returns the exact answer and the probes
/// charged for this query.
///
/// Charges: the list read (unless the ledger excludes it), then one probe
/// per uncovered cell of the rectangle — but only when the uncovered mass
/// is below the threshold. At or above it the answer is 1 outright: an
/// all-zero rectangle with that much uncovered mass would have been
/// collected during preprocessing.
pub fn cp_query(
    matrix: &BitMatrix,
    list: &ZeroRectList,
    rows: &IndexSet,
    cols: &IndexSet,
    ledger: &mut ProbeLedger,
) -> (bool, u64) {
    assert_eq!(list.n(), matrix.rows(), "list built for a different matrix size");
    assert_eq!(matrix.rows(), matrix.cols(), "matrix must be square");
    assert_eq!(rows.universe(), list.n(), "row set universe mismatch");
    assert_eq!(cols.universe(), list.n(), "column set universe mismatch");
    assert_eq!(
        ledger.word_bits(),
        list.word_bits(),
        "ledger and list disagree on the word size"
    );

    let start = ledger.probes();
    let rect_words = (2 * list.n() as u64).div_ceil(ledger.word_bits() as u64);
    if ledger.include_list_reads() {
        ledger.charge(list.len() as u64 * rect_words);
    }

    let mut pending = Vec::new();
    for i in rows.iter() {
        for j in cols.iter() {
            if !list.coverage().get(i, j) {
                pending.push((i, j));
            }
        }
    }

    if pending.len() as f64 >= probe_threshold(list.n(), ledger.word_bits()) {
        debug_assert!(
            pending.iter().any(|&(i, j)| matrix.get(i, j)),
            "threshold-heavy rectangle with no 1 survived preprocessing"
        );
        return (true, ledger.probes() - start);
    }

    ledger.charge(pending.len() as u64);
    let answer = pending.iter().any(|&(i, j)| matrix.get(i, j));
    (answer, ledger.probes() - start)
}

/// Full products under the cost model: a grid of per-block rectangle lists
/// driven through the same block-row recovery as the time-model engine.
pub struct CpOmvState {
    n: usize,
    block_side: usize,
    grid_dim: usize,
    blocks: Vec<(BitMatrix, ZeroRectList)>,
}

impl CpOmvState {
    /// Builds per-block structures; blocks are `ceil(sqrt n)`-sided, so `n`
    /// may reach [`MAX_SIDE`] squared.
    pub fn new(matrix: &BitMatrix, word_bits: usize) -> Result<CpOmvState, Error> {
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
        if n > MAX_SIDE * MAX_SIDE {
            return Err(Error::Scale(format!(
                "blocked cost model limited to n <= {}, got {n}",
                MAX_SIDE * MAX_SIDE
            )));
        }
        let mut block_side = (n as f64).sqrt().ceil() as usize;
        while block_side * block_side < n {
            block_side += 1;
        }
        let grid_dim = n.div_ceil(block_side);
        let mut blocks = Vec::with_capacity(grid_dim * grid_dim);
        for bi in 0..grid_dim {
            for bj in 0..grid_dim {
                let window =
                    matrix.window(bi * block_side, bj * block_side, block_side, block_side);
                let list = cp_preprocess(&window, word_bits)?;
                blocks.push((window, list));
            }
        }
        Ok(CpOmvState {
            n,
            block_side,
            grid_dim,
            blocks,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn block_side(&self) -> usize {
        self.block_side
    }

    /// The exact product and the probes charged for it.
    pub fn query(&self, v: &BitVector, ledger: &mut ProbeLedger) -> (BitVector, u64) {
        assert_eq!(v.len(), self.n, "vector length mismatch");
        let start = ledger.probes();
        let supports = column_supports(v, self.block_side, self.grid_dim);
        let mut out = BitVector::zeros(self.n);
        for bi in 0..self.grid_dim {
            recover_block_row(
                self.n,
                self.block_side,
                bi,
                &supports,
                |bj, rows, cols| {
                    let (matrix, list) = &self.blocks[bi * self.grid_dim + bj];
                    cp_query(matrix, list, rows, cols, ledger).0
                },
                &mut out,
            );
        }
        (out, ledger.probes() - start)
    }
}

/// Exhausts the brute-force recording step ahead of time: while any query
/// rectangle would be recorded (enough unseen mass, sparse enough), record
/// it. Afterwards no reachable query can trigger recording, so the
/// guessing query path never leaves anything unscanned on purpose.
///
/// Exhaustive over all `4^n` rectangles; limited to `n <=` [`MAX_SIDE`].
pub fn wc_preprocess(matrix: BitMatrix, params: VmvParams) -> Result<VmvState, Error> {
    if matrix.rows() > MAX_SIDE {
        return Err(Error::Scale(format!(
            "exhaustive preprocessing limited to n <= {MAX_SIDE}, got {}",
            matrix.rows()
        )));
    }
    let mut state = VmvState::new(matrix, params)?;
    while let Some((rows, cols)) = find_insertable_query(&state) {
        let (_, recorded) = state.brute_force_extract(&rows, &cols);
        assert!(recorded, "query selected for recording failed the recording tests");
    }
    Ok(state)
}

/// Scans all rectangles in ascending `(rows, cols)` bitmask order for one
/// whose exact unseen mass reaches twice the recording floor and whose
/// 1-cells are within the sparsity limit — i.e. a query that would reach
/// the brute-force step with a correctly-high estimate and be recorded.
pub fn find_insertable_query(state: &VmvState) -> Option<(IndexSet, IndexSet)> {
    let n = state.size();
    assert!(n <= MAX_SIDE, "exhaustive scan limited to n <= {MAX_SIDE}");
    let budget = state.params().extraction_budget as u128;
    let two_n2 = 2 * (n as u128) * (n as u128);
    let sparsity = state.sparsity_limit();
    let matrix_rows: Vec<u64> = (0..n).map(|i| state.matrix().row_words(i)[0]).collect();
    let unseen_rows: Vec<u64> = (0..n)
        .map(|i| state.unseen_indicator().row_words(i)[0])
        .collect();

    let full_mask = (1u64 << n) - 1;
    for row_mask in 1..=full_mask {
        // Upper bound on the unseen mass for any column set.
        let mut cap = 0u32;
        let mut probe = row_mask;
        while probe != 0 {
            let i = probe.trailing_zeros() as usize;
            cap += unseen_rows[i].count_ones();
            probe &= probe - 1;
        }
        if (cap as u128) * budget < two_n2 {
            continue;
        }
        for col_mask in 1..=full_mask {
            let mut unseen = 0u32;
            let mut ones = 0u32;
            let mut probe = row_mask;
            while probe != 0 {
                let i = probe.trailing_zeros() as usize;
                unseen += (unseen_rows[i] & col_mask).count_ones();
                ones += (matrix_rows[i] & col_mask).count_ones();
                probe &= probe - 1;
            }
            if (unseen as u128) * budget >= two_n2 && ones as f64 <= sparsity {
                return Some((
                    IndexSet::from_mask(n, row_mask),
                    IndexSet::from_mask(n, col_mask),
                ));
            }
        }
    }
    None
}

/// Query against a worst-case-preprocessed state: never scans in the dense
/// branch, answering 0 there instead. Correct with high probability (the
/// only error mode is a false 0 when the unseen-mass estimate overshoots or
/// a dense rectangle slips past the sampling step).
pub fn wc_query(state: &mut VmvState, rows: &IndexSet, cols: &IndexSet) -> bool {
    state.query_guessing(rows, cols)
}

/// Worst-case-time engine for matrices beyond [`MAX_SIDE`]: the matrix is
/// cut into `block_side`-sided blocks, each exhaustively preprocessed, and
/// a query is the OR of the per-block answers on the localized sets.
pub struct BlockedWcState {
    n: usize,
    block_side: usize,
    grid_dim: usize,
    blocks: Vec<VmvState>,
}

impl BlockedWcState {
    pub fn new(
        matrix: &BitMatrix,
        block_side: usize,
        seed: u64,
        tuning: &Tuning,
    ) -> Result<BlockedWcState, Error> {
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
        if block_side == 0 {
            return Err(Error::Config("block side must be positive".into()));
        }
        if block_side > MAX_SIDE {
            return Err(Error::Scale(format!(
                "block side {block_side} exceeds the exhaustive limit {MAX_SIDE}"
            )));
        }
        let grid_dim = n.div_ceil(block_side);
        let mut blocks = Vec::with_capacity(grid_dim * grid_dim);
        for bi in 0..grid_dim {
            for bj in 0..grid_dim {
                let window =
                    matrix.window(bi * block_side, bj * block_side, block_side, block_side);
                let params = VmvParams::derive(
                    block_side,
                    seed ^ ((bi * grid_dim + bj) as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03),
                    tuning,
                );
                blocks.push(wc_preprocess(window, params)?);
            }
        }
        Ok(BlockedWcState {
            n,
            block_side,
            grid_dim,
            blocks,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[VmvState] {
        &self.blocks
    }

    /// OR of per-block guessing queries on the localized index sets.
    /// Positive answers are always exact; false negatives have the same
    /// bounded probability as [`wc_query`], union-bounded over blocks.
    pub fn query(&mut self, rows: &IndexSet, cols: &IndexSet) -> bool {
        assert_eq!(rows.universe(), self.n, "row set universe mismatch");
        assert_eq!(cols.universe(), self.n, "column set universe mismatch");
        for bi in 0..self.grid_dim {
            let local_rows = self.localize(rows, bi);
            if local_rows.is_empty() {
                continue;
            }
            for bj in 0..self.grid_dim {
                let local_cols = self.localize(cols, bj);
                if local_cols.is_empty() {
                    continue;
                }
                if wc_query(
                    &mut self.blocks[bi * self.grid_dim + bj],
                    &local_rows,
                    &local_cols,
                ) {
                    return true;
                }
            }
        }
        false
    }

    fn localize(&self, set: &IndexSet, block: usize) -> IndexSet {
        let lo = block * self.block_side;
        let hi = lo + self.block_side;
        IndexSet::from_indices(
            self.block_side,
            set.iter()
                .skip_while(move |&i| i < lo)
                .take_while(move |&i| i < hi)
                .map(move |i| i - lo),
        )
    }
}

/// One cell of a probe-cost sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub n: usize,
    pub word_bits: usize,
    pub matrices: usize,
    pub queries: u64,
    pub mean_list_len: f64,
    pub max_list_len: usize,
    pub mean_probes: f64,
    pub max_probes: u64,
    pub threshold: f64,
    /// Worst observed probes as a multiple of the threshold.
    pub fitted_constant: f64,
}

/// Measures probe costs over a grid of sizes and word sizes.
///
/// Per matrix the query stream cycles through uniform rectangles, a
/// rectangle built to sit just under the probe threshold (the expensive
/// regime), the full rectangle, and singletons. Matrix densities cycle
/// through 0.3 / 0.5 / 0.7. Deterministic for a fixed seed.
pub fn sweep(
    sides: &[usize],
    word_sizes: &[usize],
    matrices_per_point: usize,
    queries_per_matrix: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, Error> {
    let densities = [0.3, 0.5, 0.7];
    let mut points = Vec::new();
    for &n in sides {
        for &w in word_sizes {
            let mut rng = workload::rng(seed ^ ((n * 1000 + w) as u64));
            let threshold = probe_threshold(n, w);
            let mut list_total = 0usize;
            let mut max_list = 0usize;
            let mut probe_total = 0u64;
            let mut max_probes = 0u64;
            let mut queries = 0u64;
            for mi in 0..matrices_per_point {
                let density = densities[mi % densities.len()];
                let matrix = workload::random_matrix(n, n, density, &mut rng);
                let list = cp_preprocess(&matrix, w)?;
                list_total += list.len();
                max_list = max_list.max(list.len());
                let mut ledger = ProbeLedger::new(w);
                for qi in 0..queries_per_matrix {
                    let (rows, cols) = match qi % 4 {
                        0 => (
                            workload::random_subset(n, 0.5, &mut rng),
                            workload::random_subset(n, 0.5, &mut rng),
                        ),
                        1 => near_threshold_rectangle(&list, threshold),
                        2 => (IndexSet::full(n), IndexSet::full(n)),
                        _ => (
                            IndexSet::from_indices(n, [rng.random_range(0..n)]),
                            IndexSet::from_indices(n, [rng.random_range(0..n)]),
                        ),
                    };
                    let (_, spent) = cp_query(&matrix, &list, &rows, &cols, &mut ledger);
                    probe_total += spent;
                    max_probes = max_probes.max(spent);
                    queries += 1;
                }
            }
            points.push(SweepPoint {
                n,
                word_bits: w,
                matrices: matrices_per_point,
                queries,
                mean_list_len: list_total as f64 / matrices_per_point as f64,
                max_list_len: max_list,
                mean_probes: if queries == 0 {
                    0.0
                } else {
                    probe_total as f64 / queries as f64
                },
                max_probes,
                threshold,
                fitted_constant: if threshold > 0.0 {
                    max_probes as f64 / threshold
                } else {
                    0.0
                },
            });
        }
    }
    Ok(points)
}

/// All rows crossed with a column prefix chosen so the uncovered mass lands
/// just under the threshold — the most probe-hungry rectangle shape.
fn near_threshold_rectangle(list: &ZeroRectList, threshold: f64) -> (IndexSet, IndexSet) {
    let n = list.n();
    let target = (threshold.ceil() as usize).saturating_sub(1);
    let mut uncovered_per_col: Vec<(usize, usize)> = (0..n)
        .map(|j| {
            let count = (0..n).filter(|&i| !list.coverage().get(i, j)).count();
            (count, j)
        })
        .collect();
    uncovered_per_col.sort_by(|a, b| b.cmp(a));
    let mut total = 0usize;
    let mut cols = Vec::new();
    for &(count, j) in &uncovered_per_col {
        if total + count <= target {
            total += count;
            cols.push(j);
        }
    }
    (IndexSet::full(n), IndexSet::from_indices(n, cols))
}

/// Least-squares slope of `y` against `x`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 2, "slope needs at least two points");
    let count = points.len() as f64;
    let sum_x: f64 = points.iter().map(|p| p.0).sum();
    let sum_y: f64 = points.iter().map(|p| p.1).sum();
    let sum_xy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let sum_xx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    (count * sum_xy - sum_x * sum_y) / (count * sum_xx - sum_x * sum_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{naive_matvec, naive_vmv};
    use std::collections::BTreeSet;

    #[test]
    fn threshold_spot_values() {
        assert_eq!(probe_threshold(4, 4), 4.0);
        assert_eq!(probe_threshold(9, 1), 27.0);
        assert!((probe_threshold(8, 2) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn ledger_policy_and_reset() {
        let mut on = ProbeLedger::new(4);
        assert!(on.include_list_reads());
        on.charge(3);
        assert_eq!(on.probes(), 3);
        on.reset();
        assert_eq!(on.probes(), 0);
        let off = ProbeLedger::with_policy(4, false);
        assert!(!off.include_list_reads());
    }

    #[test]
    fn preprocessing_frozen_examples() {
        // All ones: no all-zero rectangle exists at all.
        let list = cp_preprocess(&BitMatrix::filled(4, 4), 4).unwrap();
        assert!(list.is_empty());
        assert_eq!(list.coverage().count_ones(), 0);

        // All zeros at n = 4, w = 4 (threshold 4): one full rectangle.
        let list = cp_preprocess(&BitMatrix::zeros(4, 4), 4).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.rects()[0].0, IndexSet::full(4));
        assert_eq!(list.rects()[0].1, IndexSet::full(4));
        assert_eq!(list.coverage().count_ones(), 16);
    }

    #[test]
    fn preprocessing_size_guard() {
        assert!(matches!(
            cp_preprocess(&BitMatrix::zeros(13, 13), 4),
            Err(Error::Scale(_))
        ));
    }

    /// Literal greedy oracle: every (rows, cols) pair scanned with set
    /// operations, keeping the max-new-coverage all-zero rectangle with the
    /// smallest (rows, cols) masks.
    fn greedy_oracle(matrix: &BitMatrix, word_bits: usize) -> Vec<(u64, u64)> {
        let n = matrix.rows();
        let threshold = probe_threshold(n, word_bits);
        let mut covered = BTreeSet::new();
        let mut rects = Vec::new();
        loop {
            let mut best: Option<(usize, u64, u64)> = None;
            for row_mask in 1..1u64 << n {
                for col_mask in 1..1u64 << n {
                    let cells: Vec<(usize, usize)> = (0..n)
                        .flat_map(|i| (0..n).map(move |j| (i, j)))
                        .filter(|&(i, j)| row_mask >> i & 1 == 1 && col_mask >> j & 1 == 1)
                        .collect();
                    if cells.iter().any(|&(i, j)| matrix.get(i, j)) {
                        continue;
                    }
                    let fresh = cells.iter().filter(|c| !covered.contains(*c)).count();
                    let better = match best {
                        None => fresh > 0,
                        Some((bg, bu, bv)) => {
                            fresh > bg
                                || (fresh == bg
                                    && (row_mask < bu || (row_mask == bu && col_mask < bv)))
                        }
                    };
                    if better {
                        best = Some((fresh, row_mask, col_mask));
                    }
                }
            }
            match best {
                Some((gain, u, v)) if gain as f64 >= threshold => {
                    for i in 0..n {
                        for j in 0..n {
                            if u >> i & 1 == 1 && v >> j & 1 == 1 {
                                covered.insert((i, j));
                            }
                        }
                    }
                    rects.push((u, v));
                }
                _ => return rects,
            }
        }
    }

    #[test]
    fn preprocessing_matches_literal_greedy() {
        let mut rng = workload::rng(70);
        for n in 2..=5usize {
            for w in [2usize, 4, 8] {
                for _ in 0..8 {
                    let density = rng.random_range(0.1..0.9);
                    let matrix = workload::random_matrix(n, n, density, &mut rng);
                    let fast = cp_preprocess(&matrix, w).unwrap();
                    let expected = greedy_oracle(&matrix, w);
                    let got: Vec<(u64, u64)> = fast
                        .rects()
                        .iter()
                        .map(|(u, v)| {
                            let um = u.members().iter().fold(0u64, |m, &i| m | 1 << i);
                            let vm = v.members().iter().fold(0u64, |m, &j| m | 1 << j);
                            (um, vm)
                        })
                        .collect();
                    assert_eq!(got, expected, "n={n} w={w}");
                }
            }
        }
    }

    #[test]
    fn list_length_respects_the_coverage_bound() {
        let mut rng = workload::rng(71);
        for _ in 0..20 {
            let density = rng.random_range(0.0..0.6);
            let matrix = workload::random_matrix(10, 10, density, &mut rng);
            for w in [2usize, 4, 8] {
                let list = cp_preprocess(&matrix, w).unwrap();
                let bound = (10.0f64 * w as f64).sqrt();
                assert!(
                    list.len() as f64 <= bound,
                    "|list| = {} exceeds {bound}",
                    list.len()
                );
                // Rectangles really are all-zero.
                for (u, v) in list.rects() {
                    assert!(!naive_vmv(&matrix, u, v));
                }
            }
        }
    }

    #[test]
    fn query_answers_match_oracle_and_respect_probe_bound() {
        let mut rng = workload::rng(72);
        for n in [6usize, 9, 12] {
            for w in [2usize, 4, 8] {
                let matrix = workload::random_matrix(n, n, 0.4, &mut rng);
                let list = cp_preprocess(&matrix, w).unwrap();
                let mut ledger = ProbeLedger::new(w);
                let rect_words = (2 * n as u64).div_ceil(w as u64);
                let bound = list.len() as u64 * rect_words + probe_threshold(n, w).ceil() as u64;
                for _ in 0..300 {
                    let rows = workload::random_subset(n, 0.5, &mut rng);
                    let cols = workload::random_subset(n, 0.5, &mut rng);
                    let (answer, spent) = cp_query(&matrix, &list, &rows, &cols, &mut ledger);
                    assert_eq!(answer, naive_vmv(&matrix, &rows, &cols));
                    assert!(spent <= bound, "spent {spent} probes, bound {bound}");
                }
            }
        }
    }

    #[test]
    fn heavy_rectangles_cost_only_the_list_read() {
        // All ones: nothing is covered, so the full rectangle is over the
        // threshold and costs nothing beyond the (empty) list read.
        let matrix = BitMatrix::filled(6, 6);
        let list = cp_preprocess(&matrix, 4).unwrap();
        let mut ledger = ProbeLedger::new(4);
        let (answer, spent) = cp_query(
            &matrix,
            &list,
            &IndexSet::full(6),
            &IndexSet::full(6),
            &mut ledger,
        );
        assert!(answer);
        assert_eq!(spent, 0, "empty list and no entry probes");

        // All zeros: everything is covered, so the query pays the list read
        // and nothing else.
        let matrix = BitMatrix::zeros(6, 6);
        let list = cp_preprocess(&matrix, 4).unwrap();
        let mut ledger = ProbeLedger::new(4);
        let (answer, spent) = cp_query(
            &matrix,
            &list,
            &IndexSet::full(6),
            &IndexSet::full(6),
            &mut ledger,
        );
        assert!(!answer);
        assert_eq!(spent, (12u64).div_ceil(4));

        // Excluding list reads zeroes that charge too.
        let mut bare = ProbeLedger::with_policy(4, false);
        let (_, spent) = cp_query(
            &matrix,
            &list,
            &IndexSet::full(6),
            &IndexSet::full(6),
            &mut bare,
        );
        assert_eq!(spent, 0);
    }

    #[test]
    fn blocked_cost_model_products_are_exact() {
        let mut rng = workload::rng(73);
        for &(n, w) in &[(9usize, 2usize), (16, 4), (20, 8)] {
            let matrix = workload::random_matrix(n, n, 0.3, &mut rng);
            let st = CpOmvState::new(&matrix, w).unwrap();
            let mut ledger = ProbeLedger::new(w);
            for v in workload::vector_sequence(n, workload::SequenceKind::Mixed, 60, &mut rng) {
                let (out, spent) = st.query(&v, &mut ledger);
                assert_eq!(out, naive_matvec(&matrix, &v));
                assert!(spent > 0 || v.is_zero() || matrix.count_ones() == 0 || out.is_zero());
            }
        }
    }

    #[test]
    fn wc_preprocessing_terminates_with_nothing_insertable() {
        let mut rng = workload::rng(74);
        for _ in 0..10 {
            let density = rng.random_range(0.0..1.0);
            let matrix = workload::random_matrix(8, 8, density, &mut rng);
            let params = VmvParams::for_size(8, 75);
            let state = wc_preprocess(matrix, params).unwrap();
            assert!(find_insertable_query(&state).is_none());
            // Each recording removes at least twice the floor, so at most
            // half the budget is ever used.
            assert!(state.triples().len() <= state.params().extraction_budget / 2);
            state.check_invariants().unwrap();
        }
    }

    #[test]
    fn wc_on_constant_matrices_never_errs() {
        // All zeros: one recording covers everything, and 0 is always the
        // right answer afterwards.
        let params = VmvParams::for_size(8, 76);
        let mut state = wc_preprocess(BitMatrix::zeros(8, 8), params).unwrap();
        assert_eq!(state.triples().len(), 1);
        let mut rng = workload::rng(77);
        for (rows, cols) in
            workload::set_pair_sequence(8, workload::SequenceKind::Mixed, 200, &mut rng)
        {
            assert!(!wc_query(&mut state, &rows, &cols));
        }

        // All ones: nothing records (too dense); sampling finds a witness
        // on every nonempty rectangle before the guessing branch.
        let params = VmvParams::for_size(8, 78);
        let mut state = wc_preprocess(BitMatrix::filled(8, 8), params).unwrap();
        assert!(state.triples().is_empty());
        for (rows, cols) in
            workload::set_pair_sequence(8, workload::SequenceKind::Mixed, 200, &mut rng)
        {
            let expected = !rows.is_empty() && !cols.is_empty();
            assert_eq!(wc_query(&mut state, &rows, &cols), expected);
        }
        assert_eq!(state.stats().guesses, 0);
    }

    #[test]
    fn blocked_wc_matches_oracle_closely() {
        let mut rng = workload::rng(79);
        let n = 18;
        let matrix = workload::random_matrix(n, n, 0.15, &mut rng);
        let mut st = BlockedWcState::new(&matrix, 6, 80, &Tuning::default()).unwrap();
        let mut errors = 0usize;
        let total = 300usize;
        for (rows, cols) in
            workload::set_pair_sequence(n, workload::SequenceKind::Mixed, total, &mut rng)
        {
            let got = st.query(&rows, &cols);
            let expected = naive_vmv(&matrix, &rows, &cols);
            if got != expected {
                assert!(expected && !got, "false positives are impossible");
                errors += 1;
            }
        }
        assert!(
            errors * 10 <= total,
            "error rate {errors}/{total} far above the advertised bound"
        );
    }

    #[test]
    fn sweep_produces_well_formed_points() {
        let points = sweep(&[4, 6, 8], &[2, 8], 3, 16, 81).unwrap();
        assert_eq!(points.len(), 6);
        for p in &points {
            assert_eq!(p.queries, 48);
            assert!(p.threshold > 0.0);
            assert!(p.mean_probes <= p.max_probes as f64);
            let rect_words = (2 * p.n as u64).div_ceil(p.word_bits as u64);
            let bound = p.max_list_len as u64 * rect_words + p.threshold.ceil() as u64;
            assert!(p.max_probes <= bound);
        }
        // Determinism.
        let again = sweep(&[4, 6, 8], &[2, 8], 3, 16, 81).unwrap();
        for (a, b) in points.iter().zip(&again) {
            assert_eq!(a.max_probes, b.max_probes);
            assert_eq!(a.mean_probes, b.mean_probes);
        }
    }

    #[test]
    fn slope_fit_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (1..=5)
            .map(|i| {
                let x = i as f64;
                (x, 1.5 * x + 0.25)
            })
            .collect();
        assert!((fit_log_slope(&pts) - 1.5).abs() < 1e-9);
    }
}
