//! The core vector-matrix-vector engine.
//!
//! Holds a fixed square Boolean matrix `M` and answers queries of the form
//! "does the submatrix `rows x cols` contain a 1?". Answers are always
//! exact; the randomness only moves work between query paths.
//!
//! The engine maintains a shrinking set of *unseen* cells: positions covered
//! by none of the rectangles it has brute-forced so far. A query runs
//! through up to six steps:
//!
//! 1. rectangles below an area floor are scanned directly;
//! 2. a fixed number of uniform samples inside the rectangle looks for a 1
//!    (cheap success on dense submatrices);
//! 3. the recorded 1-cells of previously brute-forced rectangles are
//!    scanned;
//! 4. uniform samples from the unseen set estimate how much unseen mass the
//!    rectangle holds;
//! 5. if the estimate is large, the rectangle is scanned outright and — when
//!    it passes an exactness and sparsity test — recorded, permanently
//!    removing its cells from the unseen set;
//! 6. otherwise the rectangle's unseen cells are listed explicitly via the
//!    side-vector structure and checked individually.
//!
//! Step 5 can run at most [`VmvParams::extraction_budget`] times over the
//! whole query stream because each recorded rectangle removes a guaranteed
//! fraction of the unseen set; that is the amortization argument, and
//! [`VmvState::check_invariants`] re-derives it from scratch on demand.

use crate::bits::{submatrix_has_one, zero_rectangle, BitMatrix, IndexSet, WORD_BITS};
use crate::ovlist::{list_orthogonal_pairs, OvInstance, SideVectors};
use crate::Error;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Knobs shared by every engine constructor that derives parameters from the
/// matrix size.
#[derive(Clone, Copy, Debug)]
pub struct Tuning {
    /// Scales the exponent of the extraction budget.
    pub delta: f64,
    /// Exponent of the listing group size as a power of the budget.
    pub epsilon: f64,
    /// Coefficient of the sparsity ceiling for recorded rectangles.
    pub c: f64,
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning {
            delta: 1.0,
            epsilon: 0.5,
            c: 8.0,
        }
    }
}

/// Parameters of a [`VmvState`].
#[derive(Clone, Debug, PartialEq)]
pub struct VmvParams {
    /// Samples drawn per dense check (step 2).
    pub dense_samples: usize,
    /// Maximum number of rectangles the engine may record (step 5).
    pub extraction_budget: usize,
    /// Coefficient of the sparsity ceiling applied at recording time.
    pub sparsity_coefficient: f64,
    /// Group size for listing is `extraction_budget` raised to this power.
    pub group_exponent: f64,
    /// Seed of the engine's private generator.
    pub seed: u64,
}

impl VmvParams {
    /// Default parameters for an `n x n` matrix.
    pub fn for_size(n: usize, seed: u64) -> VmvParams {
        VmvParams::derive(n, seed, &Tuning::default())
    }

    /// Parameters for an `n x n` matrix under explicit tuning knobs:
    /// `dense_samples = ceil(n^1.5)` and an extraction budget of
    /// `2^ceil(delta * sqrt(log2 n))`, clamped to [`VmvParams::budget_cap`].
    pub fn derive(n: usize, seed: u64, tuning: &Tuning) -> VmvParams {
        assert!(n >= 1, "matrix size must be positive");
        let nf = n as f64;
        let dense_samples = nf.powf(1.5).ceil() as usize;
        let exponent = (tuning.delta * nf.log2().max(0.0).sqrt()).ceil() as u32;
        let unclamped = 1usize << exponent.min(usize::BITS - 1);
        let extraction_budget = unclamped.min(Self::budget_cap(n)).max(1);
        VmvParams {
            dense_samples: dense_samples.max(1),
            extraction_budget,
            sparsity_coefficient: tuning.c,
            group_exponent: tuning.epsilon,
            seed,
        }
    }

    /// Largest admissible extraction budget for an `n x n` matrix,
    /// `floor(n / log2 n)`. Budgets above this would let recorded-list
    /// scans dominate the query cost.
    pub fn budget_cap(n: usize) -> usize {
        assert!(n >= 1, "matrix size must be positive");
        if n == 1 {
            1
        } else {
            (n as f64 / (n as f64).log2()).floor() as usize
        }
    }

    /// Validates the parameters against a matrix size.
    pub fn validate(&self, n: usize) -> Result<(), Error> {
        if n == 0 {
            return Err(Error::Config("matrix size must be positive".into()));
        }
        if self.dense_samples == 0 {
            return Err(Error::Config("dense sample count must be positive".into()));
        }
        if self.extraction_budget == 0 {
            return Err(Error::Config("extraction budget must be positive".into()));
        }
        let cap = VmvParams::budget_cap(n);
        if self.extraction_budget > cap {
            return Err(Error::Config(format!(
                "extraction budget {} exceeds cap {} for n = {}",
                self.extraction_budget, cap, n
            )));
        }
        if !(self.sparsity_coefficient > 0.0) {
            return Err(Error::Config("sparsity coefficient must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.group_exponent) {
            return Err(Error::Config("group exponent must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A rectangle recorded by step 5: its index sets and the exact 1-cells of
/// the matrix inside it, in row-major order.
#[derive(Clone, Debug)]
pub struct ExtractedTriple {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub ones: Vec<(u32, u32)>,
}

/// Counters describing where queries were resolved. First-class state:
/// benchmarks and the amortization checks read these.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VmvStats {
    pub queries: u64,
    /// Entries into each of the six query steps. A query increments a
    /// step's slot only when the step's body runs: slot 0 is the
    /// small-rectangle scan, 1 the dense check, 2 the recorded-list scan,
    /// 3 the unseen-mass estimate, 4 the brute-force branch, 5 the listing
    /// branch.
    pub step_entries: [u64; 6],
    /// Rectangles recorded by step 5.
    pub triples_added: u64,
    /// Step-5 entries that scanned but did not record (failed the exactness
    /// or sparsity test).
    pub rejected_extractions: u64,
    /// Step-5 entries answered by a guess (worst-case mode only).
    pub guesses: u64,
    /// Listing executions, total listed pairs, and the largest single list.
    pub listings: u64,
    pub listed_pairs: u64,
    pub max_listed_pairs: u64,
}

impl VmvStats {
    /// Accumulates another stats block (sums, max for the max field).
    pub fn absorb(&mut self, other: &VmvStats) {
        self.queries += other.queries;
        for (a, b) in self.step_entries.iter_mut().zip(&other.step_entries) {
            *a += b;
        }
        self.triples_added += other.triples_added;
        self.rejected_extractions += other.rejected_extractions;
        self.guesses += other.guesses;
        self.listings += other.listings;
        self.listed_pairs += other.listed_pairs;
        self.max_listed_pairs = self.max_listed_pairs.max(other.max_listed_pairs);
    }
}

/// The vector-matrix-vector engine over one square matrix.
pub struct VmvState {
    matrix: BitMatrix,
    /// Indicator of cells covered by no recorded rectangle.
    unseen: BitMatrix,
    unseen_count: usize,
    /// `row_prefix[i]` = unseen cells in rows `0..i`; drives uniform
    /// sampling from the unseen set in logarithmic time.
    row_prefix: Vec<u64>,
    triples: Vec<ExtractedTriple>,
    side: SideVectors,
    params: VmvParams,
    rng: ChaCha8Rng,
    stats: VmvStats,
}

impl VmvState {
    /// Builds an engine over a square matrix. The whole matrix starts
    /// unseen and no rectangles are recorded.
    pub fn new(matrix: BitMatrix, params: VmvParams) -> Result<VmvState, Error> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Input(format!(
                "matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let n = matrix.rows();
        params.validate(n)?;
        let unseen = BitMatrix::filled(n, n);
        let mut state = VmvState {
            matrix,
            unseen,
            unseen_count: n * n,
            row_prefix: vec![0; n + 1],
            triples: Vec::new(),
            side: SideVectors::with_capacity(n, params.extraction_budget),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            stats: VmvStats::default(),
        };
        state.rebuild_row_prefix();
        Ok(state)
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    /// Indicator of cells covered by no recorded rectangle.
    pub fn unseen_indicator(&self) -> &BitMatrix {
        &self.unseen
    }

    pub fn unseen_count(&self) -> usize {
        self.unseen_count
    }

    pub fn triples(&self) -> &[ExtractedTriple] {
        &self.triples
    }

    pub fn side_vectors(&self) -> &SideVectors {
        &self.side
    }

    pub fn params(&self) -> &VmvParams {
        &self.params
    }

    pub fn stats(&self) -> &VmvStats {
        &self.stats
    }

    /// Listing group size: `extraction_budget^group_exponent`, at least 1.
    pub fn group_size(&self) -> usize {
        let z = self.params.extraction_budget as f64;
        (z.powf(self.params.group_exponent).floor() as usize).max(1)
    }

    /// Estimates above this trigger the brute-force branch: twice the
    /// guaranteed per-recording removal `n^2 / extraction_budget`.
    pub fn estimate_trigger(&self) -> f64 {
        let n = self.size() as f64;
        2.0 * n * n / self.params.extraction_budget as f64
    }

    /// Ceiling on the recorded 1-cells of a rectangle:
    /// `c * n^2 * ln(n) / dense_samples`. Rectangles with more 1-cells are
    /// found by the dense check instead, except with vanishing probability.
    pub fn sparsity_limit(&self) -> f64 {
        let n = self.size() as f64;
        self.params.sparsity_coefficient * n * n * n.ln() / self.params.dense_samples as f64
    }

    /// Rectangles smaller than `n^2 / extraction_budget` cells take the
    /// direct-scan path.
    fn below_area_floor(&self, area: usize) -> bool {
        let n = self.size() as u128;
        (area as u128) * (self.params.extraction_budget as u128) < n * n
    }

    /// Recording requires at least `n^2 / extraction_budget` unseen cells.
    fn meets_removal_floor(&self, unseen_cells: usize) -> bool {
        let n = self.size() as u128;
        (unseen_cells as u128) * self.params.extraction_budget as u128 >= n * n
    }

    /// Sample count for the unseen-mass estimate, `ceil(n^2 / budget)`.
    fn estimate_samples(&self) -> usize {
        (self.size() * self.size()).div_ceil(self.params.extraction_budget)
    }

    /// Draws a uniform unseen cell, or `None` when every cell is covered.
    ///
    /// Exactly uniform: a rank in `[0, unseen_count)` is drawn and resolved
    /// through the row prefix sums, then to a column by an in-word rank
    /// scan.
    pub fn sample_unseen(&mut self) -> Option<(usize, usize)> {
        if self.unseen_count == 0 {
            return None;
        }
        let target = self.rng.random_range(0..self.unseen_count as u64);
        let row = self.row_prefix.partition_point(|&p| p <= target) - 1;
        let mut remaining = (target - self.row_prefix[row]) as usize;
        for (wi, &word) in self.unseen.row_words(row).iter().enumerate() {
            let here = word.count_ones() as usize;
            if remaining < here {
                let col = wi * WORD_BITS + select_bit(word, remaining);
                return Some((row, col));
            }
            remaining -= here;
        }
        unreachable!("row prefix sums out of sync with the unseen indicator")
    }

    /// Step 2: samples cells of `rows x cols` uniformly (with replacement),
    /// returning a 1-cell if one is hit. Both sets must be nonempty.
    pub fn dense_check(&mut self, rows: &IndexSet, cols: &IndexSet) -> Option<(usize, usize)> {
        assert!(
            !rows.is_empty() && !cols.is_empty(),
            "dense check needs a nonempty rectangle"
        );
        let row_members = rows.members();
        let col_members = cols.members();
        for _ in 0..self.params.dense_samples {
            let i = row_members[self.rng.random_range(0..row_members.len())];
            let j = col_members[self.rng.random_range(0..col_members.len())];
            if self.matrix.get(i, j) {
                return Some((i, j));
            }
        }
        None
    }

    /// Step 3: scans the recorded 1-cells of every extracted rectangle for
    /// one inside `rows x cols`.
    pub fn scan_extracted(&self, rows: &IndexSet, cols: &IndexSet) -> Option<(usize, usize)> {
        for triple in &self.triples {
            for &(i, j) in &triple.ones {
                if rows.contains(i as usize) && cols.contains(j as usize) {
                    return Some((i as usize, j as usize));
                }
            }
        }
        None
    }

    /// Step 4: estimates the number of unseen cells inside `rows x cols` by
    /// drawing `ceil(n^2 / budget)` uniform unseen cells and scaling the hit
    /// fraction. Exact (0) when the unseen set is empty; exactly the unseen
    /// count when the rectangle is the full matrix.
    pub fn estimate_unseen(&mut self, rows: &IndexSet, cols: &IndexSet) -> f64 {
        if self.unseen_count == 0 {
            return 0.0;
        }
        let samples = self.estimate_samples();
        let mut hits = 0usize;
        for _ in 0..samples {
            let (i, j) = self
                .sample_unseen()
                .expect("unseen set nonempty by the check above");
            if rows.contains(i) && cols.contains(j) {
                hits += 1;
            }
        }
        hits as f64 / samples as f64 * self.unseen_count as f64
    }

    /// Step 5: scans `rows x cols` outright and, when the rectangle holds
    /// enough unseen cells and few enough 1-cells, records it and removes it
    /// from the unseen set. Returns `(answer, recorded)`.
    pub fn brute_force_extract(&mut self, rows: &IndexSet, cols: &IndexSet) -> (bool, bool) {
        assert_eq!(rows.universe(), self.size(), "row set universe mismatch");
        assert_eq!(cols.universe(), self.size(), "column set universe mismatch");
        let col_mask = cols.bits().words();

        // Exact 1-cell list of the rectangle, row-major.
        let mut ones: Vec<(u32, u32)> = Vec::new();
        for i in rows.iter() {
            for (wi, (&row_word, &mask_word)) in
                self.matrix.row_words(i).iter().zip(col_mask).enumerate()
            {
                let mut hit = row_word & mask_word;
                while hit != 0 {
                    let j = wi * WORD_BITS + hit.trailing_zeros() as usize;
                    ones.push((i as u32, j as u32));
                    hit &= hit - 1;
                }
            }
        }
        let answer = !ones.is_empty();

        // Exact unseen mass of the rectangle.
        let unseen_cells: usize = rows
            .iter()
            .map(|i| {
                self.unseen
                    .row_words(i)
                    .iter()
                    .zip(col_mask)
                    .map(|(&a, &b)| (a & b).count_ones() as usize)
                    .sum::<usize>()
            })
            .sum();

        if !self.meets_removal_floor(unseen_cells)
            || ones.len() as f64 > self.sparsity_limit()
        {
            self.stats.rejected_extractions += 1;
            return (answer, false);
        }

        // The removal floor makes this unreachable: a full budget means the
        // unseen set is empty, and an empty unseen set fails the floor.
        assert!(
            self.triples.len() < self.params.extraction_budget,
            "extraction budget exhausted while unseen cells remain"
        );

        self.side.push_rectangle(rows, cols);
        self.triples.push(ExtractedTriple {
            rows: rows.clone(),
            cols: cols.clone(),
            ones,
        });
        let removed = zero_rectangle(&mut self.unseen, rows, cols);
        debug_assert_eq!(removed, unseen_cells);
        self.unseen_count -= removed;
        self.rebuild_row_prefix();
        self.stats.triples_added += 1;
        (answer, true)
    }

    /// Answers whether the submatrix `rows x cols` contains a 1. Exact.
    pub fn query(&mut self, rows: &IndexSet, cols: &IndexSet) -> bool {
        self.query_inner(rows, cols, false)
    }

    /// Worst-case-time variant: identical to [`VmvState::query`] except the
    /// brute-force branch answers 0 immediately instead of scanning. On
    /// states prepared by `wc_preprocess` the branch misfires only with
    /// vanishing probability, so answers are correct with high probability
    /// rather than always.
    pub fn query_guessing(&mut self, rows: &IndexSet, cols: &IndexSet) -> bool {
        self.query_inner(rows, cols, true)
    }

    fn query_inner(&mut self, rows: &IndexSet, cols: &IndexSet, guess_when_dense: bool) -> bool {
        assert_eq!(rows.universe(), self.size(), "row set universe mismatch");
        assert_eq!(cols.universe(), self.size(), "column set universe mismatch");
        self.stats.queries += 1;

        // Step 1: small rectangles (including empty ones) are scanned
        // directly.
        let area = rows.len() * cols.len();
        if self.below_area_floor(area) {
            self.stats.step_entries[0] += 1;
            return submatrix_has_one(&self.matrix, rows, cols);
        }

        // Step 2: dense sampling.
        self.stats.step_entries[1] += 1;
        if self.dense_check(rows, cols).is_some() {
            return true;
        }

        // Step 3: recorded 1-cells.
        self.stats.step_entries[2] += 1;
        if self.scan_extracted(rows, cols).is_some() {
            return true;
        }

        // Step 4: unseen-mass estimate.
        self.stats.step_entries[3] += 1;
        let estimate = self.estimate_unseen(rows, cols);

        if estimate > self.estimate_trigger() {
            // Step 5: brute force, recording the rectangle when admissible.
            self.stats.step_entries[4] += 1;
            if guess_when_dense {
                self.stats.guesses += 1;
                return false;
            }
            return self.brute_force_extract(rows, cols).0;
        }

        // Step 6: list the rectangle's unseen cells and check them. Any
        // 1-cell under a recorded rectangle would have been caught by step
        // 3, so checking unseen cells is exhaustive.
        self.stats.step_entries[5] += 1;
        if self.unseen_count == 0 {
            return false;
        }
        let pairs = list_orthogonal_pairs(&OvInstance {
            side: &self.side,
            unseen: &self.unseen,
            rows,
            cols,
            group_size: self.group_size(),
        });
        self.stats.listings += 1;
        self.stats.listed_pairs += pairs.len() as u64;
        self.stats.max_listed_pairs = self.stats.max_listed_pairs.max(pairs.len() as u64);
        pairs.into_iter().any(|(i, j)| self.matrix.get(i, j))
    }

    /// Recomputes every piece of derived state from the recorded rectangles
    /// and checks the structural invariants, returning a description of the
    /// first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.size();
        let z = self.params.extraction_budget;
        if self.triples.len() > z {
            return Err(format!(
                "{} rectangles recorded, budget is {z}",
                self.triples.len()
            ));
        }
        if self.side.dim() != self.triples.len() {
            return Err(format!(
                "side vectors track {} rectangles, list holds {}",
                self.side.dim(),
                self.triples.len()
            ));
        }

        // Replay the recordings, re-deriving coverage and per-recording
        // removals.
        let mut coverage = BitMatrix::zeros(n, n);
        for (k, triple) in self.triples.iter().enumerate() {
            let mut removed = 0usize;
            for i in triple.rows.iter() {
                for j in triple.cols.iter() {
                    if !coverage.get(i, j) {
                        coverage.set(i, j, true);
                        removed += 1;
                    }
                }
            }
            if (removed as u128) * (z as u128) < (n as u128) * (n as u128) {
                return Err(format!(
                    "recording {k} removed {removed} cells, below the floor"
                ));
            }
            // Side vectors agree with the rectangle.
            for i in 0..n {
                if self.side.row_vector(i).get(k) != triple.rows.contains(i) {
                    return Err(format!("row side vector {i} disagrees at coordinate {k}"));
                }
                if self.side.col_vector(i).get(k) != triple.cols.contains(i) {
                    return Err(format!(
                        "column side vector {i} disagrees at coordinate {k}"
                    ));
                }
            }
            // Recorded 1-cells are exactly the matrix 1s of the rectangle.
            let mut expected = Vec::new();
            for i in triple.rows.iter() {
                for j in triple.cols.iter() {
                    if self.matrix.get(i, j) {
                        expected.push((i as u32, j as u32));
                    }
                }
            }
            if triple.ones != expected {
                return Err(format!("recording {k} has an inexact 1-cell list"));
            }
            if triple.ones.len() as f64 > self.sparsity_limit() {
                return Err(format!(
                    "recording {k} holds {} 1-cells, above the sparsity limit {}",
                    triple.ones.len(),
                    self.sparsity_limit()
                ));
            }
        }

        // The unseen indicator is the exact complement of coverage.
        for i in 0..n {
            for j in 0..n {
                if self.unseen.get(i, j) == coverage.get(i, j) {
                    return Err(format!("unseen indicator wrong at ({i}, {j})"));
                }
            }
        }
        if self.unseen_count != self.unseen.count_ones() {
            return Err(format!(
                "unseen count {} != indicator popcount {}",
                self.unseen_count,
                self.unseen.count_ones()
            ));
        }
        let mut acc = 0u64;
        for i in 0..n {
            if self.row_prefix[i] != acc {
                return Err(format!("row prefix wrong at row {i}"));
            }
            acc += self.unseen.row_count_ones(i) as u64;
        }
        if self.row_prefix[n] != acc {
            return Err("row prefix wrong at the end".into());
        }
        Ok(())
    }

    fn rebuild_row_prefix(&mut self) {
        let n = self.size();
        let mut acc = 0u64;
        for i in 0..n {
            self.row_prefix[i] = acc;
            acc += self.unseen.row_count_ones(i) as u64;
        }
        self.row_prefix[n] = acc;
        debug_assert_eq!(acc as usize, self.unseen_count);
    }
}

/// Index of the `rank`-th (0-based) set bit of `word`.
fn select_bit(mut word: u64, rank: usize) -> usize {
    debug_assert!(rank < word.count_ones() as usize);
    for _ in 0..rank {
        word &= word - 1;
    }
    word.trailing_zeros() as usize
}
