//! WalkSAT local search, used to finish formulas that survey propagation
//! no longer constrains.

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::instance::{Assignment, Formula};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSatConfig {
    /// Probability of a random-walk move when every flip breaks a clause.
    pub noise: f64,
    /// Flips per try; 0 picks `100 * n_vars + 100_000`.
    pub max_flips: usize,
    /// Independent restarts from fresh random assignments.
    pub max_tries: usize,
}

impl Default for WalkSatConfig {
    fn default() -> Self {
        WalkSatConfig {
            noise: 0.5,
            max_flips: 0,
            max_tries: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkSatResult {
    /// A satisfying assignment, if one was found.
    pub assignment: Option<Vec<bool>>,
    /// Total flips over all tries.
    pub flips: usize,
    pub tries: usize,
}

impl WalkSatResult {
    /// The solution as a complete [`Assignment`].
    pub fn to_assignment(&self) -> Option<Assignment> {
        self.assignment.as_deref().map(Assignment::from_bools)
    }
}

struct Search<'a> {
    f: &'a Formula,
    values: Vec<bool>,
    true_count: Vec<u32>,
    unsat: Vec<usize>,
    /// Position of each clause in `unsat`, or `usize::MAX`.
    unsat_pos: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(f: &'a Formula, values: Vec<bool>) -> Self {
        let m = f.n_clauses();
        let mut s = Search {
            f,
            values,
            true_count: vec![0; m],
            unsat: Vec::new(),
            unsat_pos: vec![usize::MAX; m],
        };
        for c in 0..m {
            s.true_count[c] = f
                .clause_edges(c)
                .filter(|&e| {
                    let l = f.edge_literal(e);
                    l.is_satisfied_by(s.values[l.var])
                })
                .count() as u32;
            if s.true_count[c] == 0 {
                s.push_unsat(c);
            }
        }
        s
    }

    fn push_unsat(&mut self, c: usize) {
        self.unsat_pos[c] = self.unsat.len();
        self.unsat.push(c);
    }

    fn remove_unsat(&mut self, c: usize) {
        let pos = self.unsat_pos[c];
        let last = *self.unsat.last().expect("clause is unsatisfied");
        self.unsat.swap_remove(pos);
        if last != c {
            self.unsat_pos[last] = pos;
        }
        self.unsat_pos[c] = usize::MAX;
    }

    /// Clauses that become unsatisfied if `var` flips.
    fn break_count(&self, var: usize) -> usize {
        self.f
            .var_edges(var)
            .iter()
            .filter(|&&e| {
                let c = self.f.edge_clause(e);
                self.true_count[c] == 1 && self.f.edge_literal(e).is_satisfied_by(self.values[var])
            })
            .count()
    }

    fn flip(&mut self, var: usize) {
        for &e in self.f.var_edges(var) {
            let c = self.f.edge_clause(e);
            if self.f.edge_literal(e).is_satisfied_by(self.values[var]) {
                self.true_count[c] -= 1;
                if self.true_count[c] == 0 {
                    self.push_unsat(c);
                }
            } else {
                self.true_count[c] += 1;
                if self.true_count[c] == 1 {
                    self.remove_unsat(c);
                }
            }
        }
        self.values[var] = !self.values[var];
    }
}

/// Runs WalkSAT (SKC variant). Formulas containing an empty clause fail
/// immediately.
pub fn walksat(f: &Formula, cfg: &WalkSatConfig, seed: u64) -> WalkSatResult {
    let mut r = rng::rng_stream(seed, 0x5a7);
    let max_flips = if cfg.max_flips == 0 {
        100 * f.n_vars() + 100_000
    } else {
        cfg.max_flips
    };
    let mut result = WalkSatResult {
        assignment: None,
        flips: 0,
        tries: 0,
    };
    if f.clauses().iter().any(|c| c.is_empty()) {
        return result;
    }
    let mut candidates = Vec::with_capacity(3);
    for _ in 0..cfg.max_tries.max(1) {
        result.tries += 1;
        let init = (0..f.n_vars()).map(|_| r.random()).collect();
        let mut s = Search::new(f, init);
        for _ in 0..max_flips {
            if s.unsat.is_empty() {
                break;
            }
            let c = *s.unsat.choose(&mut r).expect("nonempty");
            candidates.clear();
            let mut best = usize::MAX;
            for e in f.clause_edges(c) {
                let v = f.edge_literal(e).var;
                let b = s.break_count(v);
                if b < best {
                    best = b;
                    candidates.clear();
                }
                if b == best {
                    candidates.push(v);
                }
            }
            let var = if best > 0 && r.random::<f64>() < cfg.noise {
                f.edge_literal(f.clause_edges(c).start + r.random_range(0..f.clause_edges(c).len())).var
            } else {
                *candidates.choose(&mut r).expect("clause has literals")
            };
            s.flip(var);
            result.flips += 1;
        }
        if s.unsat.is_empty() {
            result.assignment = Some(s.values);
            return result;
        }
    }
    result
}
