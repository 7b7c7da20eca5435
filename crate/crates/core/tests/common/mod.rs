#![allow(dead_code)]

use std::collections::VecDeque;

use ksat_core::rng::Rng;
use ksat_core::{Clause, Formula, Literal};
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Random forest-shaped formula on at most `max_vars` variables. Clauses
/// have one to three literals with random signs; each clause shares at most
/// one variable with the clauses placed before it.
pub fn random_forest(r: &mut Rng, max_vars: usize) -> Formula {
    let n = r.random_range(1..=max_vars);
    let mut placed = 1;
    let mut clauses = Vec::new();
    while placed < n {
        let new = r.random_range(1..=2usize).min(n - placed);
        let mut vars: Vec<usize> = (placed..placed + new).collect();
        // occasionally start a new component instead of attaching
        if new == 2 && r.random_bool(0.1) {
        } else {
            vars.push(r.random_range(0..placed));
        }
        placed += new;
        vars.shuffle(r);
        clauses.push(signed(r, &vars));
        if r.random_bool(0.1) {
            let v = r.random_range(0..placed);
            clauses.push(signed(r, &[v]));
        }
    }
    Formula::new(n, clauses).unwrap()
}

fn signed(r: &mut Rng, vars: &[usize]) -> Clause {
    Clause::new(vars.iter().map(|&v| Literal::new(v, r.random_bool(0.5))).collect())
}

/// Largest number of clause nodes on a path of the factor graph.
pub fn clause_diameter(f: &Formula) -> usize {
    let mut best = 0;
    for src in 0..f.n_clauses() {
        let mut dist = vec![0usize; f.n_clauses()];
        dist[src] = 1;
        let mut queue = VecDeque::from([src]);
        while let Some(c) = queue.pop_front() {
            best = best.max(dist[c]);
            for l in f.clause(c).lits() {
                for occ in f.adjacency(l.var) {
                    if dist[occ.clause] == 0 {
                        dist[occ.clause] = dist[c] + 1;
                        queue.push_back(occ.clause);
                    }
                }
            }
        }
    }
    best
}
