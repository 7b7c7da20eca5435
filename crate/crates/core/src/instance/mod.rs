//! Random 3-SAT instances: literals, clauses, formulas with their factor-graph
//! adjacency, assignments, DIMACS I/O and simplification under a partial
//! assignment.

mod dimacs;
mod simplify;

pub use dimacs::{parse_dimacs, write_dimacs};
pub use simplify::{simplify, Simplified, SimplifyStatus};

use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A signed occurrence of a variable. `negated` is the clause signature:
/// the literal is satisfied when the variable value differs from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn new(var: usize, negated: bool) -> Self {
        Literal { var, negated }
    }

    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// `σ XOR b`.
    #[inline]
    pub fn is_satisfied_by(self, value: bool) -> bool {
        value != self.negated
    }

    /// The variable value that makes this literal true.
    #[inline]
    pub fn satisfying_value(self) -> bool {
        !self.negated
    }

    /// 1-based signed DIMACS integer.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals. Random instances always have width 3;
/// simplification and DIMACS input may produce other widths.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    lits: Vec<Literal>,
}

impl Clause {
    pub fn new(lits: Vec<Literal>) -> Self {
        Clause { lits }
    }

    pub fn lits(&self) -> &[Literal] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn has_distinct_vars(&self) -> bool {
        self.lits
            .iter()
            .enumerate()
            .all(|(k, l)| self.lits[..k].iter().all(|m| m.var != l.var))
    }

    /// Truth value of the clause. Every variable of the clause must be set.
    pub fn evaluate(&self, a: &Assignment) -> Result<bool> {
        let mut sat = false;
        for l in &self.lits {
            match a.get(l.var) {
                Some(v) => sat |= l.is_satisfied_by(v),
                None => return Err(Error::IncompleteAssignment(l.var)),
            }
        }
        Ok(sat)
    }

    /// Truth value under a complete assignment given as booleans.
    #[inline]
    pub fn is_satisfied(&self, values: &[bool]) -> bool {
        self.lits.iter().any(|l| l.is_satisfied_by(values[l.var]))
    }
}

/// Position of a variable inside a clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub clause: usize,
    pub pos: usize,
}

/// A CNF formula over `n_vars` variables together with its factor graph.
///
/// Directed edges are numbered clause by clause: the edge of literal `k` of
/// clause `c` is `edge_start(c) + k`. Message-passing engines index their
/// per-edge arrays with these numbers.
#[derive(Clone, Debug)]
pub struct Formula {
    n_vars: usize,
    clauses: Vec<Clause>,
    edge_start: Vec<usize>,
    edge_lit: Vec<Literal>,
    edge_clause: Vec<usize>,
    var_start: Vec<usize>,
    var_edges: Vec<usize>,
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.n_vars == other.n_vars && self.clauses == other.clauses
    }
}

impl Formula {
    /// Builds a formula; fails when a literal refers to a variable `>= n_vars`.
    pub fn new(n_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        for (c, cl) in clauses.iter().enumerate() {
            if let Some(l) = cl.lits.iter().find(|l| l.var >= n_vars) {
                return Err(Error::InvalidInstance(format!(
                    "clause {c} uses variable {} but the formula has {n_vars} variables",
                    l.var
                )));
            }
        }
        let mut edge_start = Vec::with_capacity(clauses.len() + 1);
        let mut edge_lit = Vec::new();
        let mut edge_clause = Vec::new();
        edge_start.push(0);
        for (c, cl) in clauses.iter().enumerate() {
            edge_lit.extend_from_slice(&cl.lits);
            edge_clause.extend(std::iter::repeat_n(c, cl.lits.len()));
            edge_start.push(edge_lit.len());
        }
        let mut var_start = vec![0usize; n_vars + 1];
        for l in &edge_lit {
            var_start[l.var + 1] += 1;
        }
        for i in 0..n_vars {
            var_start[i + 1] += var_start[i];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0usize; edge_lit.len()];
        for (e, l) in edge_lit.iter().enumerate() {
            var_edges[fill[l.var]] = e;
            fill[l.var] += 1;
        }
        Ok(Formula {
            n_vars,
            clauses,
            edge_start,
            edge_lit,
            edge_clause,
            var_start,
            var_edges,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, c: usize) -> &Clause {
        &self.clauses[c]
    }

    /// M / N.
    pub fn density(&self) -> f64 {
        if self.n_vars == 0 {
            0.0
        } else {
            self.clauses.len() as f64 / self.n_vars as f64
        }
    }

    pub fn n_edges(&self) -> usize {
        self.edge_lit.len()
    }

    #[inline]
    pub fn clause_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.edge_start[c]..self.edge_start[c + 1]
    }

    #[inline]
    pub fn edge_literal(&self, e: usize) -> Literal {
        self.edge_lit[e]
    }

    #[inline]
    pub fn edge_clause(&self, e: usize) -> usize {
        self.edge_clause[e]
    }

    /// Edges incident to variable `i`, in increasing edge order.
    #[inline]
    pub fn var_edges(&self, i: usize) -> &[usize] {
        &self.var_edges[self.var_start[i]..self.var_start[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.var_start[i + 1] - self.var_start[i]
    }

    /// Clauses containing variable `i` and the position of `i` inside each.
    pub fn adjacency(&self, i: usize) -> impl Iterator<Item = Occurrence> + '_ {
        self.var_edges(i).iter().map(move |&e| {
            let clause = self.edge_clause[e];
            Occurrence {
                clause,
                pos: e - self.edge_start[clause],
            }
        })
    }

    /// True when every clause has exactly three pairwise distinct variables.
    pub fn is_3sat(&self) -> bool {
        self.clauses
            .iter()
            .all(|c| c.len() == 3 && c.has_distinct_vars())
    }

    /// Message passing needs every clause non-empty with distinct variables.
    pub(crate) fn check_message_passing(&self) -> Result<()> {
        if self.n_vars.max(self.n_edges()) > u32::MAX as usize {
            return Err(Error::InvalidInstance(format!(
                "{} variables and {} literals exceed the message-passing limit of {}",
                self.n_vars,
                self.n_edges(),
                u32::MAX
            )));
        }
        for (c, cl) in self.clauses.iter().enumerate() {
            if cl.is_empty() {
                return Err(Error::InvalidInstance(format!("clause {c} is empty")));
            }
            if !cl.has_distinct_vars() {
                return Err(Error::InvalidInstance(format!(
                    "clause {c} repeats a variable"
                )));
            }
        }
        Ok(())
    }

    /// Legal-configuration test: every clause is true under `a`.
    pub fn evaluate(&self, a: &Assignment) -> Result<bool> {
        if a.len() != self.n_vars {
            return Err(Error::InvalidInstance(format!(
                "assignment has {} variables, formula has {}",
                a.len(),
                self.n_vars
            )));
        }
        let mut all = true;
        for c in &self.clauses {
            all &= c.evaluate(a)?;
        }
        Ok(all)
    }

    /// Number of clauses violated by a complete boolean assignment.
    pub fn count_violated(&self, values: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| !c.is_satisfied(values))
            .count()
    }

    /// Whether the factor graph is acyclic.
    pub fn is_forest(&self) -> bool {
        // union-find over variables and clauses; an edge closing a cycle fails
        let n = self.n_vars + self.clauses.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (e, l) in self.edge_lit.iter().enumerate() {
            let a = find(&mut parent, l.var);
            let b = find(&mut parent, self.n_vars + self.edge_clause[e]);
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }
}

/// Random K=3 formula: `round(alpha * n)` clauses, each over three distinct
/// uniformly chosen variables with independent fair-coin signatures.
pub fn generate_random(n: usize, alpha: f64, seed: u64) -> Result<Formula> {
    if n < 3 {
        return Err(Error::InvalidInstance(format!(
            "random 3-SAT needs at least 3 variables, got {n}"
        )));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInstance(format!(
            "clause density must be positive, got {alpha}"
        )));
    }
    let m = (alpha * n as f64).round() as usize;
    let mut rng = rng::rng(seed);
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        let mut vars = [0usize; 3];
        let mut k = 0;
        while k < 3 {
            let v = rng.random_range(0..n);
            if !vars[..k].contains(&v) {
                vars[k] = v;
                k += 1;
            }
        }
        let lits = vars
            .iter()
            .map(|&v| Literal::new(v, rng.random_bool(0.5)))
            .collect();
        clauses.push(Clause::new(lits));
    }
    Formula::new(n, clauses)
}

/// Per-variable tri-state assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn unset(n: usize) -> Self {
        Assignment {
            values: vec![None; n],
        }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        Assignment {
            values: values.iter().map(|&v| Some(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<bool> {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.values[i] = Some(v);
    }

    pub fn clear(&mut self, i: usize) {
        self.values[i] = None;
    }

    pub fn n_set(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn n_unset(&self) -> usize {
        self.values.len() - self.n_set()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn values(&self) -> &[Option<bool>] {
        &self.values
    }

    /// Complete boolean vector, unset variables mapped to `default`.
    pub fn to_bools(&self, default: bool) -> Vec<bool> {
        self.values.iter().map(|v| v.unwrap_or(default)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause(l: &[(usize, bool)]) -> Clause {
        Clause::new(l.iter().map(|&(v, n)| Literal::new(v, n)).collect())
    }

    #[test]
    fn generated_clause_counts() {
        assert_eq!(generate_random(4, 1.0, 1).unwrap().n_clauses(), 4);
        assert_eq!(generate_random(100, 4.267, 9).unwrap().n_clauses(), 427);
        let f = generate_random(3, 1.0 / 3.0, 5).unwrap();
        assert_eq!(f.n_clauses(), 1);
        let mut vars: Vec<_> = f.clause(0).lits().iter().map(|l| l.var).collect();
        vars.sort();
        assert_eq!(vars, vec![0, 1, 2]);
    }

    #[test]
    fn generation_is_deterministic_and_well_formed() {
        let a = generate_random(500, 4.2, 42).unwrap();
        let b = generate_random(500, 4.2, 42).unwrap();
        let c = generate_random(500, 4.2, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.is_3sat());
        let total: usize = (0..a.n_vars()).map(|i| a.degree(i)).sum();
        assert_eq!(total, 3 * a.n_clauses());
        for i in 0..a.n_vars() {
            for occ in a.adjacency(i) {
                assert_eq!(a.clause(occ.clause).lits()[occ.pos].var, i);
            }
        }
    }

    #[test]
    fn generation_rejects_small_n() {
        assert!(matches!(
            generate_random(2, 1.0, 0),
            Err(Error::InvalidInstance(_))
        ));
        assert!(generate_random(10, 0.0, 0).is_err());
    }

    #[test]
    fn clause_semantics() {
        let all_pos = clause(&[(0, false), (1, false), (2, false)]);
        let all_neg = clause(&[(0, true), (1, true), (2, true)]);
        let f = Assignment::from_bools(&[false, false, false]);
        let t = Assignment::from_bools(&[true, true, true]);
        let first = Assignment::from_bools(&[true, false, false]);
        assert!(!all_pos.evaluate(&f).unwrap());
        assert!(all_pos.evaluate(&first).unwrap());
        assert!(!all_neg.evaluate(&t).unwrap());
        let mut partial = Assignment::unset(3);
        partial.set(0, true);
        assert_eq!(
            all_pos.evaluate(&partial),
            Err(Error::IncompleteAssignment(1))
        );
    }

    #[test]
    fn formula_semantics() {
        let empty = Formula::new(3, vec![]).unwrap();
        assert!(empty.evaluate(&Assignment::from_bools(&[false; 3])).unwrap());
        let one = Formula::new(3, vec![clause(&[(0, false), (1, true), (2, false)])]).unwrap();
        assert!(one.evaluate(&Assignment::from_bools(&[true, true, false])).unwrap());
        let two = Formula::new(
            3,
            vec![
                clause(&[(0, false), (1, true), (2, false)]),
                clause(&[(0, false), (1, false), (2, false)]),
            ],
        )
        .unwrap();
        assert!(!two
            .evaluate(&Assignment::from_bools(&[false, false, false]))
            .unwrap());
        assert_eq!(two.count_violated(&[false, false, false]), 1);
    }

    #[test]
    fn out_of_range_literal_rejected() {
        assert!(Formula::new(2, vec![clause(&[(2, false)])]).is_err());
    }

    #[test]
    fn forest_detection() {
        let tree = Formula::new(
            5,
            vec![
                clause(&[(0, false), (1, false), (2, false)]),
                clause(&[(2, true), (3, false), (4, true)]),
            ],
        )
        .unwrap();
        assert!(tree.is_forest());
        let cyc = Formula::new(
            4,
            vec![
                clause(&[(0, false), (1, false), (2, false)]),
                clause(&[(0, true), (1, false), (3, true)]),
            ],
        )
        .unwrap();
        assert!(!cyc.is_forest());
    }
}
