use super::{Assignment, Clause, Formula, Literal};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplifyStatus {
    Reduced,
    /// Clause `clause` of the input formula has all of its literals false.
    Contradiction { clause: usize },
}

/// Result of [`simplify`]. Variable indices are never renumbered: the reduced
/// formula keeps `n_vars` of its input and fixed variables simply stop
/// appearing in clauses.
#[derive(Clone, Debug)]
pub struct Simplified {
    pub formula: Formula,
    pub assignment: Assignment,
    pub status: SimplifyStatus,
    /// For each clause of the reduced formula, its index in the input formula.
    pub origin: Vec<usize>,
    /// Variables fixed by unit propagation (in propagation order).
    pub propagated: Vec<usize>,
}

/// Removes satisfied clauses, drops false literals and runs unit propagation
/// to a fixpoint, extending the assignment. Repeated literals are merged and
/// tautological clauses count as satisfied.
pub fn simplify(f: &Formula, a: &Assignment) -> Result<Simplified> {
    if a.len() != f.n_vars() {
        return Err(Error::InvalidInstance(format!(
            "assignment has {} variables, formula has {}",
            a.len(),
            f.n_vars()
        )));
    }
    let m = f.n_clauses();
    let mut assignment = a.clone();
    let mut satisfied = vec![false; m];
    let mut free = vec![0usize; m];
    let mut units = Vec::new();
    let mut propagated = Vec::new();
    let mut conflict = None;

    for (c, cl) in f.clauses().iter().enumerate() {
        let lits = cl.lits();
        let tautology = lits
            .iter()
            .any(|l| lits.iter().any(|k| k.var == l.var && k.negated != l.negated));
        if tautology {
            satisfied[c] = true;
            continue;
        }
        for (k, l) in lits.iter().enumerate() {
            match assignment.get(l.var) {
                Some(v) if l.is_satisfied_by(v) => satisfied[c] = true,
                Some(_) => {}
                // count each unset variable once
                None if !lits[..k].iter().any(|p| p.var == l.var) => free[c] += 1,
                None => {}
            }
        }
        if !satisfied[c] {
            match free[c] {
                0 => {
                    conflict.get_or_insert(c);
                }
                1 => units.push(c),
                _ => {}
            }
        }
    }

    let mut queue: Vec<usize> = Vec::new();
    'outer: while conflict.is_none() {
        if let Some(var) = queue.pop() {
            let value = assignment.get(var).expect("queued variables are set");
            for &e in f.var_edges(var) {
                let c = f.edge_clause(e);
                if satisfied[c] {
                    continue;
                }
                let lit = f.edge_literal(e);
                if lit.is_satisfied_by(value) {
                    satisfied[c] = true;
                    continue;
                }
                // a repeated literal is counted once in `free`
                let first = f
                    .clause(c)
                    .lits()
                    .iter()
                    .position(|l| l.var == var)
                    .expect("variable occurs in its clause");
                if f.clause_edges(c).start + first != e {
                    continue;
                }
                free[c] -= 1;
                match free[c] {
                    0 => {
                        conflict = Some(c);
                        continue 'outer;
                    }
                    1 => units.push(c),
                    _ => {}
                }
            }
            continue;
        }
        let Some(c) = units.pop() else { break };
        if satisfied[c] || free[c] != 1 {
            continue;
        }
        let lit = f
            .clause(c)
            .lits()
            .iter()
            .copied()
            .find(|l| assignment.get(l.var).is_none())
            .expect("unit clause has one unset literal");
        assignment.set(lit.var, lit.satisfying_value());
        propagated.push(lit.var);
        queue.push(lit.var);
    }

    if let Some(clause) = conflict {
        return Ok(Simplified {
            formula: f.clone(),
            assignment,
            status: SimplifyStatus::Contradiction { clause },
            origin: (0..m).collect(),
            propagated,
        });
    }

    let mut clauses = Vec::new();
    let mut origin = Vec::new();
    for (c, cl) in f.clauses().iter().enumerate() {
        if satisfied[c] {
            continue;
        }
        let mut lits: Vec<Literal> = Vec::with_capacity(cl.len());
        for &l in cl.lits() {
            if assignment.get(l.var).is_none() && !lits.contains(&l) {
                lits.push(l);
            }
        }
        clauses.push(Clause::new(lits));
        origin.push(c);
    }
    Ok(Simplified {
        formula: Formula::new(f.n_vars(), clauses)?,
        assignment,
        status: SimplifyStatus::Reduced,
        origin,
        propagated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random;
    use crate::oracle;
    use proptest::prelude::*;

    fn pos3() -> Formula {
        Formula::new(
            3,
            vec![Clause::new(vec![
                Literal::pos(0),
                Literal::pos(1),
                Literal::pos(2),
            ])],
        )
        .unwrap()
    }

    #[test]
    fn satisfied_clause_is_removed() {
        let mut a = Assignment::unset(3);
        a.set(0, true);
        let s = simplify(&pos3(), &a).unwrap();
        assert_eq!(s.status, SimplifyStatus::Reduced);
        assert_eq!(s.formula.n_clauses(), 0);
    }

    #[test]
    fn unit_clause_forces_last_literal() {
        let mut a = Assignment::unset(3);
        a.set(0, false);
        a.set(1, false);
        let s = simplify(&pos3(), &a).unwrap();
        assert_eq!(s.status, SimplifyStatus::Reduced);
        assert_eq!(s.assignment.get(2), Some(true));
        assert_eq!(s.propagated, vec![2]);
        assert_eq!(s.formula.n_clauses(), 0);
    }

    #[test]
    fn all_false_is_a_contradiction() {
        let a = Assignment::from_bools(&[false, false, false]);
        let s = simplify(&pos3(), &a).unwrap();
        assert_eq!(s.status, SimplifyStatus::Contradiction { clause: 0 });
    }

    #[test]
    fn propagation_chains_and_shortens() {
        // (x0 v x1) (-x1 v x2 v x3) (-x2 v x4 v x5), fix x0 = false
        let f = Formula::new(
            6,
            vec![
                Clause::new(vec![Literal::pos(0), Literal::pos(1)]),
                Clause::new(vec![Literal::neg(1), Literal::pos(2), Literal::pos(3)]),
                Clause::new(vec![Literal::neg(2), Literal::pos(4), Literal::pos(5)]),
            ],
        )
        .unwrap();
        let mut a = Assignment::unset(6);
        a.set(0, false);
        let s = simplify(&f, &a).unwrap();
        assert_eq!(s.assignment.get(1), Some(true));
        assert_eq!(s.origin, vec![1, 2]);
        assert_eq!(s.formula.clause(0).lits(), &[Literal::pos(2), Literal::pos(3)]);
    }

    #[test]
    fn conflicting_units_detected() {
        let f = Formula::new(
            2,
            vec![
                Clause::new(vec![Literal::pos(0), Literal::pos(1)]),
                Clause::new(vec![Literal::pos(0), Literal::neg(1)]),
            ],
        )
        .unwrap();
        let mut a = Assignment::unset(2);
        a.set(0, false);
        let s = simplify(&f, &a).unwrap();
        assert!(matches!(s.status, SimplifyStatus::Contradiction { .. }));
    }

    #[test]
    fn tautologies_and_repeats() {
        let f = Formula::new(
            3,
            vec![
                Clause::new(vec![Literal::pos(0), Literal::neg(0), Literal::pos(1)]),
                Clause::new(vec![Literal::pos(2), Literal::pos(2), Literal::pos(1)]),
            ],
        )
        .unwrap();
        let mut a = Assignment::unset(3);
        a.set(1, false);
        let s = simplify(&f, &a).unwrap();
        assert_eq!(s.status, SimplifyStatus::Reduced);
        assert_eq!(s.assignment.get(2), Some(true));
        assert_eq!(s.formula.n_clauses(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        /// Simplification preserves satisfiability of the formula restricted
        /// to the fixed partial assignment.
        #[test]
        fn preserves_satisfiability(n in 4usize..14, alpha in 1.0f64..6.0, seed in any::<u64>(), mask in any::<u32>(), vals in any::<u32>()) {
            let f = generate_random(n, alpha, seed).unwrap();
            let mut a = Assignment::unset(n);
            for i in 0..n {
                if mask >> i & 1 == 1 && i % 3 == 0 {
                    a.set(i, vals >> i & 1 == 1);
                }
            }
            let restricted_sat = oracle::count_with_partial(&f, &a).unwrap() > 0;
            let s = simplify(&f, &a).unwrap();
            match s.status {
                SimplifyStatus::Contradiction { .. } => prop_assert!(!restricted_sat),
                SimplifyStatus::Reduced => {
                    let reduced_sat = oracle::count_with_partial(&s.formula, &s.assignment).unwrap() > 0;
                    prop_assert_eq!(restricted_sat, reduced_sat);
                    for c in s.formula.clauses() {
                        prop_assert!(c.len() >= 2);
                        for l in c.lits() {
                            prop_assert!(s.assignment.get(l.var).is_none());
                        }
                    }
                }
            }
        }
    }
}
