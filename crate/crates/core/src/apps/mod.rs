//! Applications reduced to online matrix-vector products.

pub mod cnf;
pub mod graph;
pub mod pm;

pub use cnf::{CnfFormula, CnfHandle, Literal};
pub use graph::{GraphHandle, SetQueryMode};
pub use pm::{PartialMatchIndex, PmCorpus, PmSymbol, SubsetCode};
