//! Partial-match retrieval over a corpus of strings with wildcards.
//!
//! Symbols are mapped to constant-weight set codes over a small universe:
//! symbol `x` in a corpus string contributes the code set `S_x`, and in a
//! query the complement set `T_x`. Two non-wildcard symbols collide (share
//! a coordinate) exactly when they differ, and wildcards encode to nothing,
//! so a query matches a string iff their encodings are orthogonal. That
//! turns partial match into a complemented matrix-vector product over the
//! encoded corpus, which is answered by square product-engine tiles.

use crate::bits::{BitMatrix, BitVector};
use crate::omv::OmvState;
use crate::Error;

/// A corpus symbol; `None` is the wildcard.
pub type PmSymbol = Option<u32>;

/// Largest supported alphabet; code enumeration uses 64-bit masks.
pub const MAX_ALPHABET: u32 = 1 << 20;

/// Constant-weight set codes for an alphabet.
///
/// For an alphabet of `k` symbols the universe has `2 * ceil(log2 k)`
/// coordinates; symbol `x` gets the `x`-th half-weight subset in ascending
/// bitmask order as its string code `S_x`, and the complement as its query
/// code `T_x`. Then `S_x` and `T_y` are disjoint iff `x == y`: equal
/// symbols by construction, and distinct equal-weight sets can never
/// contain one another.
pub struct SubsetCode {
    alphabet: u32,
    dim: usize,
    string_codes: Vec<BitVector>,
    query_codes: Vec<BitVector>,
}

impl SubsetCode {
    pub fn new(alphabet: u32) -> Result<SubsetCode, Error> {
        if alphabet == 0 {
            return Err(Error::Config("alphabet must be nonempty".into()));
        }
        if alphabet > MAX_ALPHABET {
            return Err(Error::Scale(format!(
                "alphabet size {alphabet} exceeds the supported maximum {MAX_ALPHABET}"
            )));
        }
        let half = if alphabet == 1 {
            0
        } else {
            (alphabet - 1).ilog2() as usize + 1
        };
        let dim = 2 * half;
        let mut string_codes = Vec::with_capacity(alphabet as usize);
        let mut query_codes = Vec::with_capacity(alphabet as usize);
        let mut mask: u64 = (1u64 << half) - 1;
        for sym in 0..alphabet {
            let code = BitVector::from_indices(dim, (0..dim).filter(|&b| mask >> b & 1 == 1));
            query_codes.push(code.complement());
            string_codes.push(code);
            if sym + 1 < alphabet {
                mask = next_same_weight(mask);
            }
        }
        Ok(SubsetCode {
            alphabet,
            dim,
            string_codes,
            query_codes,
        })
    }

    /// Coordinates per symbol.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    /// Code set used for corpus strings.
    pub fn string_code(&self, symbol: u32) -> &BitVector {
        &self.string_codes[symbol as usize]
    }

    /// Complement code set used for queries.
    pub fn query_code(&self, symbol: u32) -> &BitVector {
        &self.query_codes[symbol as usize]
    }
}

/// Next mask with the same popcount in ascending numeric order.
fn next_same_weight(mask: u64) -> u64 {
    debug_assert!(mask != 0);
    let lowest = mask & mask.wrapping_neg();
    let carried = mask + lowest;
    carried | ((mask ^ carried) >> (lowest.trailing_zeros() + 2))
}

/// A corpus of equal-length strings over `{0, ..., alphabet-1}` with
/// wildcards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PmCorpus {
    pub length: usize,
    pub alphabet: u32,
    pub strings: Vec<Vec<PmSymbol>>,
}

impl PmCorpus {
    pub fn validate(&self) -> Result<(), Error> {
        if self.alphabet == 0 {
            return Err(Error::Input("alphabet must be nonempty".into()));
        }
        for (i, s) in self.strings.iter().enumerate() {
            if s.len() != self.length {
                return Err(Error::Input(format!(
                    "string {i} has length {}, expected {}",
                    s.len(),
                    self.length
                )));
            }
            for &sym in s {
                if let Some(x) = sym {
                    if x >= self.alphabet {
                        return Err(Error::Input(format!(
                            "string {i} uses symbol {x} outside the alphabet"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses the text format: a `count length alphabet` header, then one
    /// string per line. Alphabets up to 26 use letters (`a` = 0) with `*`
    /// as the wildcard; larger alphabets use whitespace-separated numbers
    /// and `*`.
    pub fn parse(text: &str) -> Result<PmCorpus, Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty corpus text".into()))?;
        let mut parts = header.split_whitespace();
        let mut field = |name: &str| -> Result<u64, Error> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("corpus header missing {name}")))
        };
        let count = field("count")? as usize;
        let length = field("length")? as usize;
        let alphabet = field("alphabet")? as u32;
        let mut strings = Vec::with_capacity(count);
        for i in 0..count {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("corpus ends early at string {i}")))?;
            strings.push(parse_symbols(line, length, alphabet)?);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after last string".into()));
        }
        let corpus = PmCorpus {
            length,
            alphabet,
            strings,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.strings.len(), self.length, self.alphabet);
        for s in &self.strings {
            out.push_str(&render_symbols(s, self.alphabet));
            out.push('\n');
        }
        out
    }
}

/// Parses one string line; shared by the corpus format and query files.
pub fn parse_symbols(line: &str, length: usize, alphabet: u32) -> Result<Vec<PmSymbol>, Error> {
    let symbols: Vec<PmSymbol> = if alphabet <= 26 {
        line.trim()
            .chars()
            .map(|ch| match ch {
                '*' => Ok(None),
                'a'..='z' => Ok(Some(ch as u32 - 'a' as u32)),
                other => Err(Error::Parse(format!(
                    "unexpected character {other:?} in string (want a-z or *)"
                ))),
            })
            .collect::<Result<_, _>>()?
    } else {
        line.split_whitespace()
            .map(|tok| {
                if tok == "*" {
                    Ok(None)
                } else {
                    tok.parse::<u32>()
                        .map(Some)
                        .map_err(|_| Error::Parse(format!("bad symbol {tok:?}")))
                }
            })
            .collect::<Result<_, _>>()?
    };
    if symbols.len() != length {
        return Err(Error::Parse(format!(
            "string has {} symbols, expected {length}",
            symbols.len()
        )));
    }
    Ok(symbols)
}

/// Renders one string line; inverse of [`parse_symbols`].
pub fn render_symbols(symbols: &[PmSymbol], alphabet: u32) -> String {
    if alphabet <= 26 {
        symbols
            .iter()
            .map(|&s| match s {
                None => '*',
                Some(x) => char::from(b'a' + x as u8),
            })
            .collect()
    } else {
        symbols
            .iter()
            .map(|&s| match s {
                None => "*".to_string(),
                Some(x) => x.to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Online partial-match index over a fixed corpus.
pub struct PartialMatchIndex {
    strings: usize,
    length: usize,
    code: SubsetCode,
    encoded: BitMatrix,
    row_tiles: usize,
    engines: Vec<OmvState>,
}

impl PartialMatchIndex {
    /// Encodes the corpus and builds one product engine per
    /// `length x length` tile of the encoded matrix. Requires
    /// `1 <= length <= strings`.
    pub fn build(corpus: &PmCorpus, seed: u64) -> Result<PartialMatchIndex, Error> {
        corpus.validate()?;
        let n = corpus.strings.len();
        let m = corpus.length;
        if m == 0 {
            return Err(Error::Input("strings must be nonempty".into()));
        }
        if m > n {
            return Err(Error::Input(format!(
                "string length {m} exceeds corpus size {n}; tiles would be ragged"
            )));
        }
        let code = SubsetCode::new(corpus.alphabet)?;
        let dim = code.dim();
        let mut encoded = BitMatrix::zeros(n, m * dim);
        for (i, s) in corpus.strings.iter().enumerate() {
            for (j, &sym) in s.iter().enumerate() {
                if let Some(x) = sym {
                    for bit in code.string_code(x).iter_ones() {
                        encoded.set(i, j * dim + bit, true);
                    }
                }
            }
        }
        let row_tiles = n.div_ceil(m);
        let mut engines = Vec::with_capacity(row_tiles * dim);
        for rt in 0..row_tiles {
            for ct in 0..dim {
                let tile = encoded.window(rt * m, ct * m, m, m);
                let tile_seed = seed ^ ((rt * dim + ct) as u64 + 1).wrapping_mul(0xA076_1D64_78BD_642F);
                engines.push(OmvState::new(&tile, tile_seed)?);
            }
        }
        Ok(PartialMatchIndex {
            strings: n,
            length: m,
            code,
            encoded,
            row_tiles,
            engines,
        })
    }

    pub fn string_count(&self) -> usize {
        self.strings
    }

    pub fn string_length(&self) -> usize {
        self.length
    }

    pub fn code(&self) -> &SubsetCode {
        &self.code
    }

    /// The encoded corpus matrix (`strings x (length * code dim)`).
    pub fn encoded_matrix(&self) -> &BitMatrix {
        &self.encoded
    }

    pub fn row_tiles(&self) -> usize {
        self.row_tiles
    }

    /// Tiles per row tile (the code dimension).
    pub fn col_tiles(&self) -> usize {
        self.code.dim()
    }

    /// Encodes a query with the complement codes; wildcards contribute
    /// nothing.
    pub fn encode_query(&self, query: &[PmSymbol]) -> Result<BitVector, Error> {
        if query.len() != self.length {
            return Err(Error::Input(format!(
                "query has length {}, expected {}",
                query.len(),
                self.length
            )));
        }
        let dim = self.code.dim();
        let mut encoded = BitVector::zeros(self.length * dim);
        for (j, &sym) in query.iter().enumerate() {
            if let Some(x) = sym {
                if x >= self.code.alphabet() {
                    return Err(Error::Input(format!(
                        "query symbol {x} outside the alphabet"
                    )));
                }
                for bit in self.code.query_code(x).iter_ones() {
                    encoded.set(j * dim + bit, true);
                }
            }
        }
        Ok(encoded)
    }

    /// Match vector of a query: bit `i` says corpus string `i` matches.
    /// Exact; answered purely by product queries on the tiles.
    pub fn query(&mut self, query: &[PmSymbol]) -> Result<BitVector, Error> {
        let encoded = self.encode_query(query)?;
        let m = self.length;
        let dim = self.code.dim();
        let mut out = BitVector::zeros(self.strings);
        for rt in 0..self.row_tiles {
            // OR of tile products = "row collides with the query" indicator.
            let mut collides = BitVector::zeros(m);
            for ct in 0..dim {
                let chunk = encoded.slice(ct * m, m);
                if chunk.is_zero() {
                    continue;
                }
                let product = self.engines[rt * dim + ct].query(&chunk);
                collides.or_assign(&product);
            }
            for r in 0..m {
                let global = rt * m + r;
                if global >= self.strings {
                    break;
                }
                if !collides.get(r) {
                    out.set(global, true);
                }
            }
        }
        Ok(out)
    }
}
