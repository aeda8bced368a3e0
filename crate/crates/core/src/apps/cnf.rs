//! Online evaluation of a fixed 2-CNF formula under streamed assignments.
//!
//! Each clause `(a OR b)` is violated exactly when the assignment makes both
//! `NOT a` and `NOT b` true. Put one node per literal and connect `NOT a`
//! with `NOT b` for every clause; an assignment satisfies the formula iff
//! the set of literals it makes true is independent in that graph, which is
//! one product query. Clauses of the form `(a OR a)` become self-loops, so
//! this literal graph is not a simple graph and gets its own engine rather
//! than a [`crate::apps::GraphHandle`].

use crate::bits::{BitMatrix, BitVector};
use crate::omv::OmvState;
use crate::Error;

/// A literal: variable index plus polarity.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn negated(self) -> Literal {
        Literal {
            var: self.var,
            positive: !self.positive,
        }
    }

    /// Node index in the literal graph: `2 * var` for the positive literal,
    /// `2 * var + 1` for the negative one.
    fn node(self) -> usize {
        2 * self.var + usize::from(!self.positive)
    }
}

/// A 2-CNF formula: a conjunction of two-literal clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    pub vars: usize,
    pub clauses: Vec<(Literal, Literal)>,
}

impl CnfFormula {
    pub fn validate(&self) -> Result<(), Error> {
        if self.vars == 0 {
            return Err(Error::Input("formula needs at least one variable".into()));
        }
        for (idx, &(a, b)) in self.clauses.iter().enumerate() {
            if a.var >= self.vars || b.var >= self.vars {
                return Err(Error::Input(format!(
                    "clause {idx} references a variable outside 1..={}",
                    self.vars
                )));
            }
        }
        Ok(())
    }

    /// Parses the text format: a `vars clauses` header, then one clause per
    /// line as two signed 1-based variable indices (`-3 1` is
    /// `(NOT x3 OR x1)`).
    pub fn parse(text: &str) -> Result<CnfFormula, Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty formula text".into()))?;
        let mut parts = header.split_whitespace();
        let vars: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad formula header {header:?}")))?;
        let count: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad formula header {header:?}")))?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!("bad formula header {header:?}")));
        }
        let mut clauses = Vec::with_capacity(count);
        for idx in 0..count {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("formula ends early at clause {idx}")))?;
            let mut lits = line.split_whitespace().map(|tok| -> Result<Literal, Error> {
                let raw: i64 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad literal {tok:?}")))?;
                if raw == 0 {
                    return Err(Error::Parse("literal 0 is not allowed".into()));
                }
                Ok(Literal {
                    var: raw.unsigned_abs() as usize - 1,
                    positive: raw > 0,
                })
            });
            let a = lits
                .next()
                .ok_or_else(|| Error::Parse(format!("clause {idx} is empty")))??;
            let b = lits
                .next()
                .ok_or_else(|| Error::Parse(format!("clause {idx} needs two literals")))??;
            if lits.next().is_some() {
                return Err(Error::Parse(format!("clause {idx} has more than two literals")));
            }
            clauses.push((a, b));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after last clause".into()));
        }
        let formula = CnfFormula { vars, clauses };
        formula.validate()?;
        Ok(formula)
    }

    /// Renders the formula in the format accepted by [`CnfFormula::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vars, self.clauses.len());
        for &(a, b) in &self.clauses {
            let enc = |l: Literal| {
                let v = l.var as i64 + 1;
                if l.positive {
                    v
                } else {
                    -v
                }
            };
            out.push_str(&format!("{} {}\n", enc(a), enc(b)));
        }
        out
    }
}

/// Online evaluator for one formula.
pub struct CnfHandle {
    vars: usize,
    literal_adjacency: BitMatrix,
    engine: OmvState,
}

impl CnfHandle {
    /// Builds the literal-graph engine for a formula.
    pub fn new(formula: &CnfFormula, seed: u64) -> Result<CnfHandle, Error> {
        formula.validate()?;
        let nodes = 2 * formula.vars;
        let mut adj = BitMatrix::zeros(nodes, nodes);
        for &(a, b) in &formula.clauses {
            let u = a.negated().node();
            let v = b.negated().node();
            adj.set(u, v, true);
            adj.set(v, u, true);
        }
        let engine = OmvState::new(&adj, seed)?;
        Ok(CnfHandle {
            vars: formula.vars,
            literal_adjacency: adj,
            engine,
        })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// The literal-graph adjacency (for inspection; diagonal entries encode
    /// single-literal clauses).
    pub fn literal_adjacency(&self) -> &BitMatrix {
        &self.literal_adjacency
    }

    /// Evaluates the formula under an assignment (`assignment[i]` is the
    /// value of variable `i`). Exact.
    pub fn eval(&mut self, assignment: &BitVector) -> bool {
        assert_eq!(assignment.len(), self.vars, "assignment length mismatch");
        let true_literals = BitVector::from_indices(
            2 * self.vars,
            (0..self.vars).map(|i| 2 * i + usize::from(!assignment.get(i))),
        );
        let conflicted = self.engine.query(&true_literals);
        !conflicted.intersects(&true_literals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::cnf_clause_scan;
    use crate::workload;

    fn lit(raw: i64) -> Literal {
        Literal {
            var: raw.unsigned_abs() as usize - 1,
            positive: raw > 0,
        }
    }

    #[test]
    fn empty_formula_is_always_true() {
        let f = CnfFormula {
            vars: 4,
            clauses: vec![],
        };
        let mut h = CnfHandle::new(&f, 0).unwrap();
        for bits in 0..16u32 {
            let a = BitVector::from_indices(4, (0..4).filter(|&i| bits >> i & 1 == 1));
            assert!(h.eval(&a));
        }
    }

    #[test]
    fn single_literal_clause_forces_the_variable() {
        // (x1 OR x1): satisfied exactly when x1 is true. The clause becomes
        // a self-loop on the node of NOT x1.
        let f = CnfFormula {
            vars: 2,
            clauses: vec![(lit(1), lit(1))],
        };
        let mut h = CnfHandle::new(&f, 1).unwrap();
        assert!(h.literal_adjacency().get(1, 1), "self-loop expected");
        assert!(!h.eval(&BitVector::zeros(2)));
        assert!(h.eval(&BitVector::from_indices(2, [0])));
    }

    #[test]
    fn contradiction_is_never_satisfied() {
        let f = CnfFormula {
            vars: 1,
            clauses: vec![(lit(1), lit(1)), (lit(-1), lit(-1))],
        };
        let mut h = CnfHandle::new(&f, 2).unwrap();
        assert!(!h.eval(&BitVector::zeros(1)));
        assert!(!h.eval(&BitVector::ones(1)));
    }

    #[test]
    fn implication_chain_example() {
        // (NOT x1 OR x2) AND (NOT x2 OR x3): satisfied unless the chain is
        // broken.
        let f = CnfFormula {
            vars: 3,
            clauses: vec![(lit(-1), lit(2)), (lit(-2), lit(3))],
        };
        let mut h = CnfHandle::new(&f, 3).unwrap();
        for bits in 0..8u32 {
            let a = BitVector::from_indices(3, (0..3).filter(|&i| bits >> i & 1 == 1));
            assert_eq!(h.eval(&a), cnf_clause_scan(&f, &a), "assignment {bits:03b}");
        }
    }

    #[test]
    fn evaluation_matches_clause_scan_on_random_formulas() {
        let mut rng = workload::rng(50);
        for round in 0..6 {
            let vars = 8 + 4 * round;
            let f = workload::random_cnf(vars, 3 * vars, &mut rng);
            let mut h = CnfHandle::new(&f, 51).unwrap();
            for _ in 0..100 {
                let a = workload::random_bitvector(vars, 0.5, &mut rng);
                assert_eq!(h.eval(&a), cnf_clause_scan(&f, &a));
            }
        }
    }

    #[test]
    fn text_round_trip_and_errors() {
        let f = CnfFormula {
            vars: 3,
            clauses: vec![(lit(-3), lit(1)), (lit(2), lit(2))],
        };
        let text = f.to_text();
        assert_eq!(text, "3 2\n-3 1\n2 2\n");
        assert_eq!(CnfFormula::parse(&text).unwrap(), f);

        assert!(matches!(CnfFormula::parse(""), Err(Error::Parse(_))));
        assert!(matches!(CnfFormula::parse("2 1\n1 0\n"), Err(Error::Parse(_))));
        assert!(matches!(CnfFormula::parse("2 2\n1 2\n"), Err(Error::Parse(_))));
        // Variable out of range fails validation.
        assert!(matches!(CnfFormula::parse("2 1\n3 1\n"), Err(Error::Input(_))));
    }
}
