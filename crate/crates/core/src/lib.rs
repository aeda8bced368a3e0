//! Boolean matrix-vector engines with amortized subquadratic online queries.
//!
//! The library is organised around one core object: a randomized data
//! structure over a fixed Boolean matrix that answers *vector-matrix-vector*
//! queries ("does the submatrix indexed by a row set and a column set contain
//! a 1?") and, on top of it, full online matrix-vector products, graph and
//! formula queries, partial-match retrieval, and a cell-probe cost simulator.
//!
//! All arithmetic is over the Boolean semiring: addition is OR, multiplication
//! is AND. Every engine is exact; randomness only affects running time, never
//! answers. The one deliberate exception is the worst-case-time variant in
//! [`cellprobe`], which guesses on a bounded-probability branch and is
//! documented as such.
//!
//! Module map:
//!
//! * [`bits`] — packed bit vectors, bit matrices, index sets.
//! * [`oracle`] — naive reference implementations used as correctness
//!   oracles and baselines.
//! * [`ovlist`] — orthogonal-vector pair listing over the extracted
//!   rectangle structure.
//! * [`vmv`] — the core vector-matrix-vector engine.
//! * [`omv`] — online matrix-vector products via a blocked reduction.
//! * [`apps`] — graph set queries, triangle queries, 2-CNF evaluation,
//!   partial match.
//! * [`cellprobe`] — probe-counting simulator and worst-case-time variants.
//! * [`workload`] — seeded input and query-sequence generators.

pub mod apps;
pub mod bits;
pub mod cellprobe;
pub mod omv;
pub mod oracle;
pub mod ovlist;
pub mod vmv;
pub mod workload;

pub use bits::{BitMatrix, BitVector, IndexSet};

/// Errors surfaced by constructors and text-format parsers.
///
/// Contract violations inside hot paths (mismatched dimensions handed to a
/// query, out-of-range indices) are bugs in the caller and are enforced with
/// assertions instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A structural parameter is out of its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data fails validation (shape, symbol range, symmetry, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// The operation is restricted to small instances and the input exceeds
    /// that limit.
    #[error("instance too large: {0}")]
    Scale(String),

    /// A text artifact could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}
