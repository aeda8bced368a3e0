//! Packed Boolean vectors, matrices, and index sets.
//!
//! Everything downstream (engines, oracles, applications) is built on these
//! three types. Bits are packed into `u64` words, least significant bit
//! first. Unused bits past the logical length are kept at zero by every
//! mutating operation; that canonical padding is what lets higher layers
//! compare and combine raw words without masking.

use crate::Error;

/// Bits per storage word.
pub const WORD_BITS: usize = 64;

fn word_count(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// Mask selecting the live bits of the last storage word.
fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

/// A fixed-length Boolean vector packed into `u64` words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    /// All-zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; word_count(len)],
        }
    }

    /// All-one vector of the given length.
    pub fn ones(len: usize) -> Self {
        let mut v = BitVector {
            len,
            words: vec![!0u64; word_count(len)],
        };
        v.clear_padding();
        v
    }

    /// Builds a vector from explicit bit values.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector of length `len` with the given positions set.
    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut v = BitVector::zeros(len);
        for i in indices {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of bounds for length {}", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of bounds for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Raw storage words; padding bits past `len` are always zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        self.count_ones() == self.len
    }

    /// True when the two vectors share a set position (Boolean inner
    /// product). Lengths must match.
    pub fn intersects(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in inner product");
        self.words
            .iter()
            .zip(&other.words)
            .any(|(&a, &b)| a & b != 0)
    }

    /// In-place OR with another vector of the same length.
    pub fn or_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in or_assign");
        for (a, &b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Bitwise complement within the logical length.
    pub fn complement(&self) -> BitVector {
        let mut out = BitVector {
            len: self.len,
            words: self.words.iter().map(|&w| !w).collect(),
        };
        out.clear_padding();
        out
    }

    /// Copies `len` bits starting at `start` into a fresh vector.
    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        assert!(start + len <= self.len, "slice out of bounds");
        let mut out = BitVector::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }

    /// Iterator over the positions of set bits, in increasing order.
    pub fn iter_ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Parses a line of `0`/`1` characters.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let text = text.trim();
        let mut v = BitVector::zeros(text.len());
        for (i, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                other => {
                    return Err(Error::Parse(format!(
                        "unexpected character {other:?} in bit vector (want 0 or 1)"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// Renders the vector as a line of `0`/`1` characters.
    pub fn to_text(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    fn clear_padding(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVector({})", self.to_text())
    }
}

/// Iterator over set-bit positions of a word slice.
pub struct Ones<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.word_index += 1;
            if self.word_index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_index];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.word_index * WORD_BITS + bit)
    }
}

/// A dense Boolean matrix with word-packed rows.
///
/// Rows are stored contiguously, each padded to a whole number of words, so
/// a row is addressable as a `&[u64]` for word-parallel operations.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = word_count(cols);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    /// All-one matrix.
    pub fn filled(rows: usize, cols: usize) -> Self {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            let mask = tail_mask(cols);
            let row = m.row_words_mut(r);
            for w in row.iter_mut() {
                *w = !0;
            }
            if let Some(last) = row.last_mut() {
                *last &= mask;
            }
        }
        m
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows, "row index {r} out of bounds");
        assert!(c < self.cols, "column index {c} out of bounds");
        let w = self.words[r * self.words_per_row + c / WORD_BITS];
        w >> (c % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows, "row index {r} out of bounds");
        assert!(c < self.cols, "column index {c} out of bounds");
        let idx = r * self.words_per_row + c / WORD_BITS;
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            self.words[idx] |= mask;
        } else {
            self.words[idx] &= !mask;
        }
    }

    /// The packed words of row `r`.
    pub fn row_words(&self, r: usize) -> &[u64] {
        assert!(r < self.rows, "row index {r} out of bounds");
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        assert!(r < self.rows, "row index {r} out of bounds");
        &mut self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Copies row `r` into a standalone vector.
    pub fn row_vector(&self, r: usize) -> BitVector {
        BitVector {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    /// Overwrites row `r` with the contents of `v` (length must equal the
    /// column count).
    pub fn set_row(&mut self, r: usize, v: &BitVector) {
        assert_eq!(v.len(), self.cols, "row length mismatch");
        self.row_words_mut(r).copy_from_slice(v.words());
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Popcount of a single row.
    pub fn row_count_ones(&self, r: usize) -> usize {
        self.row_words(r)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// True when row `r` and `v` share a set position.
    pub fn row_intersects(&self, r: usize, v: &BitVector) -> bool {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        self.row_words(r)
            .iter()
            .zip(v.words())
            .any(|(&a, &b)| a & b != 0)
    }

    /// Extracts the `height x width` window anchored at `(r0, c0)`.
    ///
    /// Cells that fall outside the matrix read as zero, so callers can tile
    /// a matrix into equal blocks without special-casing the ragged edge.
    pub fn window(&self, r0: usize, c0: usize, height: usize, width: usize) -> BitMatrix {
        let mut out = BitMatrix::zeros(height, width);
        for r in 0..height {
            if r0 + r >= self.rows {
                break;
            }
            for c in 0..width {
                if c0 + c >= self.cols {
                    break;
                }
                if self.get(r0 + r, c0 + c) {
                    out.set(r, c, true);
                }
            }
        }
        out
    }

    /// Parses the text matrix format: a `rows cols` header line followed by
    /// one `0`/`1` line per row.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let mut parts = header.split_whitespace();
        let rows: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad matrix header {header:?}")))?;
        let cols: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad matrix header {header:?}")))?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!("bad matrix header {header:?}")));
        }
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("matrix ends early at row {r}")))?;
            let row = BitVector::parse(line)?;
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row {r} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            m.set_row(r, &row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after last matrix row".into()));
        }
        Ok(m)
    }

    /// Renders the matrix in the text format accepted by [`BitMatrix::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            out.push_str(&self.row_vector(r).to_text());
            out.push('\n');
        }
        out
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitMatrix({}x{})", self.rows, self.cols)
    }
}

/// An immutable subset of `{0, ..., universe-1}` with cached cardinality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexSet {
    bits: BitVector,
    card: usize,
}

impl IndexSet {
    /// The empty subset of a universe of the given size.
    pub fn empty(universe: usize) -> Self {
        IndexSet {
            bits: BitVector::zeros(universe),
            card: 0,
        }
    }

    /// The full subset `{0, ..., universe-1}`.
    pub fn full(universe: usize) -> Self {
        IndexSet {
            bits: BitVector::ones(universe),
            card: universe,
        }
    }

    /// Wraps a membership vector; cardinality is computed once here.
    pub fn from_bits(bits: BitVector) -> Self {
        let card = bits.count_ones();
        IndexSet { bits, card }
    }

    /// Builds a subset of `{0, ..., universe-1}` from explicit members.
    pub fn from_indices<I: IntoIterator<Item = usize>>(universe: usize, indices: I) -> Self {
        IndexSet::from_bits(BitVector::from_indices(universe, indices))
    }

    /// Builds a subset of a small universe (at most 64) from a bit mask.
    pub fn from_mask(universe: usize, mask: u64) -> Self {
        assert!(universe <= WORD_BITS, "mask constructor limited to 64 elements");
        assert!(
            universe == WORD_BITS || mask >> universe == 0,
            "mask has bits outside the universe"
        );
        IndexSet::from_indices(universe, (0..universe).filter(|&i| mask >> i & 1 == 1))
    }

    /// Size of the ambient universe.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.card
    }

    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.get(i)
    }

    /// The underlying membership vector.
    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    /// Iterator over members in increasing order.
    pub fn iter(&self) -> Ones<'_> {
        self.bits.iter_ones()
    }

    /// Members collected in increasing order.
    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Complement within the same universe.
    pub fn complement(&self) -> IndexSet {
        IndexSet::from_bits(self.bits.complement())
    }
}

/// True when the submatrix `rows x cols` of `m` contains a 1.
///
/// Word-parallel: each selected row is ANDed against the column mask. The
/// sets must live in universes matching the matrix shape.
pub fn submatrix_has_one(m: &BitMatrix, rows: &IndexSet, cols: &IndexSet) -> bool {
    assert_eq!(rows.universe(), m.rows(), "row set universe mismatch");
    assert_eq!(cols.universe(), m.cols(), "column set universe mismatch");
    rows.iter().any(|r| m.row_intersects(r, cols.bits()))
}

/// Clears every cell of the `rows x cols` rectangle in `m`, returning how
/// many set bits were removed.
pub fn zero_rectangle(m: &mut BitMatrix, rows: &IndexSet, cols: &IndexSet) -> usize {
    assert_eq!(rows.universe(), m.rows(), "row set universe mismatch");
    assert_eq!(cols.universe(), m.cols(), "column set universe mismatch");
    let mask = cols.bits().words().to_vec();
    let mut removed = 0;
    for r in rows.iter() {
        for (w, &keep_out) in m.row_words_mut(r).iter_mut().zip(&mask) {
            removed += (*w & keep_out).count_ones() as usize;
            *w &= !keep_out;
        }
    }
    removed
}
