//! Exact brute-force reference for small formulas: model counting by two
//! independent routes, explicit solution lists, Hamming-radius clusters with
//! their backbones, and the exact cluster-count change under clamping.
//!
//! Solutions are bitmasks: bit `i` holds the value of variable `i`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, Formula};

/// Largest formula [`enumerate`] accepts.
pub const MAX_VARS: usize = 30;
/// Default cap on materialized solutions.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub count: u64,
    /// Present iff `count <= cap`, sorted ascending.
    pub solutions: Option<Vec<u64>>,
    /// `ln(count)`, `-inf` for an unsatisfiable formula.
    pub entropy: f64,
}

impl EnumerationResult {
    pub fn is_unsat(&self) -> bool {
        self.count == 0
    }
}

fn guard(f: &Formula) -> Result<()> {
    if f.n_vars() > MAX_VARS {
        return Err(Error::TooManyVariables {
            n: f.n_vars(),
            limit: MAX_VARS,
        });
    }
    Ok(())
}

/// Exact model count with solutions materialized when there are at most `cap`.
pub fn enumerate(f: &Formula, cap: usize) -> Result<EnumerationResult> {
    guard(f)?;
    let count = count_dpll(f)?;
    let solutions = if count as u128 <= cap as u128 {
        let mut sols = Vec::with_capacity(count as usize);
        dpll(f, &Assignment::unset(f.n_vars()), &mut |cube: &[Option<bool>]| {
            expand_cube(cube, &mut sols);
        });
        sols.sort_unstable();
        Some(sols)
    } else {
        None
    };
    Ok(EnumerationResult {
        count,
        solutions,
        entropy: if count == 0 {
            f64::NEG_INFINITY
        } else {
            (count as f64).ln()
        },
    })
}

fn clause_masks(f: &Formula) -> Vec<(u64, u64)> {
    f.clauses()
        .iter()
        .map(|c| {
            c.lits().iter().fold((0u64, 0u64), |(p, n), l| {
                if l.negated {
                    (p, n | 1 << l.var)
                } else {
                    (p | 1 << l.var, n)
                }
            })
        })
        .collect()
}

/// Model count by scanning all `2^N` assignments against clause bitmasks.
pub fn count_exhaustive(f: &Formula) -> Result<u64> {
    guard(f)?;
    let masks = clause_masks(f);
    let total = 1u64 << f.n_vars();
    let mut count = 0u64;
    for x in 0..total {
        if masks.iter().all(|&(p, n)| x & p != 0 || !x & n != 0) {
            count += 1;
        }
    }
    Ok(count)
}

/// Model count by DPLL with unit propagation; satisfied subtrees contribute
/// `2^free` at once.
pub fn count_dpll(f: &Formula) -> Result<u64> {
    guard(f)?;
    count_with_partial(f, &Assignment::unset(f.n_vars()))
}

/// Number of solutions extending the partial assignment `a`.
pub fn count_with_partial(f: &Formula, a: &Assignment) -> Result<u64> {
    guard(f)?;
    let mut count = 0u64;
    dpll(f, a, &mut |cube: &[Option<bool>]| {
        count += 1u64 << cube.iter().filter(|v| v.is_none()).count();
    });
    Ok(count)
}

fn expand_cube(cube: &[Option<bool>], out: &mut Vec<u64>) {
    let mut base = 0u64;
    let mut free = Vec::new();
    for (i, v) in cube.iter().enumerate() {
        match v {
            Some(true) => base |= 1 << i,
            Some(false) => {}
            None => free.push(i),
        }
    }
    for bits in 0u64..(1u64 << free.len()) {
        let mut x = base;
        for (k, &i) in free.iter().enumerate() {
            if bits >> k & 1 == 1 {
                x |= 1 << i;
            }
        }
        out.push(x);
    }
}

/// Calls `emit` once per disjoint cube (partial assignment whose every
/// completion is a solution) covering the solutions that extend `start`.
fn dpll(f: &Formula, start: &Assignment, emit: &mut dyn FnMut(&[Option<bool>])) {
    let mut values: Vec<Option<bool>> = start.values().to_vec();
    dpll_rec(f, &mut values, emit);
}

fn dpll_rec(f: &Formula, values: &mut Vec<Option<bool>>, emit: &mut dyn FnMut(&[Option<bool>])) {
    let mut trail = Vec::new();
    loop {
        let mut unit = None;
        let mut branch: Option<(usize, usize)> = None; // (free literals, var)
        let mut all_sat = true;
        for c in f.clauses() {
            let mut sat = false;
            let mut n_free = 0;
            let mut last_free = None;
            for l in c.lits() {
                match values[l.var] {
                    Some(v) if l.is_satisfied_by(v) => {
                        sat = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        n_free += 1;
                        last_free = Some(*l);
                    }
                }
            }
            if sat {
                continue;
            }
            all_sat = false;
            match n_free {
                0 => {
                    for v in trail {
                        values[v] = None;
                    }
                    return;
                }
                1 => {
                    unit = last_free;
                    break;
                }
                k => {
                    let var = last_free.expect("free literal").var;
                    if branch.is_none_or(|(b, _)| k < b) {
                        branch = Some((k, var));
                    }
                }
            }
        }
        if all_sat {
            emit(values);
            break;
        }
        if let Some(l) = unit {
            values[l.var] = Some(l.satisfying_value());
            trail.push(l.var);
            continue;
        }
        let (_, var) = branch.expect("unsatisfied clause with free literals");
        for v in [false, true] {
            values[var] = Some(v);
            dpll_rec(f, values, emit);
        }
        values[var] = None;
        break;
    }
    for v in trail {
        values[v] = None;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    /// Each cluster's solutions, sorted; clusters ordered by smallest member.
    pub clusters: Vec<Vec<u64>>,
    pub adjacency_radius: usize,
    /// Per cluster, the variables constant across it and their value.
    pub backbones: Vec<Vec<(usize, bool)>>,
}

impl ClusterDecomposition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

fn binomial_sum(n: usize, r: usize) -> u128 {
    let mut total = 0u128;
    let mut term = 1u128;
    for k in 0..=r.min(n) {
        total += term;
        term = term * (n - k) as u128 / (k + 1) as u128;
    }
    total
}

/// Connected components of the graph joining solutions at Hamming distance
/// `<= radius`, over `n_vars` variables.
pub fn decompose_clusters(sols: &[u64], n_vars: usize, radius: usize) -> ClusterDecomposition {
    let s = sols.len();
    let mut parent: Vec<usize> = (0..s).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };
    if radius > 0 && s > 1 {
        let neighbourhood = binomial_sum(n_vars, radius);
        if neighbourhood < s as u128 {
            let index: HashMap<u64, usize> = sols.iter().enumerate().map(|(k, &x)| (x, k)).collect();
            let flips = flip_masks(n_vars, radius);
            for (k, &x) in sols.iter().enumerate() {
                for &m in &flips {
                    if let Some(&j) = index.get(&(x ^ m)) {
                        union(&mut parent, k, j);
                    }
                }
            }
        } else {
            for a in 0..s {
                for b in a + 1..s {
                    if ((sols[a] ^ sols[b]).count_ones() as usize) <= radius {
                        union(&mut parent, a, b);
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<u64>> = HashMap::new();
    for (k, &sol) in sols.iter().enumerate() {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().push(sol);
    }
    let mut clusters: Vec<Vec<u64>> = groups.into_values().collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_unstable_by_key(|c| c[0]);
    let backbones = clusters.iter().map(|c| backbone(c, n_vars)).collect();
    ClusterDecomposition {
        clusters,
        adjacency_radius: radius,
        backbones,
    }
}

fn flip_masks(n: usize, radius: usize) -> Vec<u64> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, left: usize, cur: u64, out: &mut Vec<u64>) {
        if cur != 0 {
            out.push(cur);
        }
        if left == 0 {
            return;
        }
        for i in start..n {
            rec(i + 1, n, left - 1, cur | 1 << i, out);
        }
    }
    rec(0, n, radius, 0, &mut out);
    out
}

fn backbone(cluster: &[u64], n_vars: usize) -> Vec<(usize, bool)> {
    let all = cluster.iter().fold(!0u64, |a, &x| a & x);
    let any = cluster.iter().fold(0u64, |a, &x| a | x);
    (0..n_vars)
        .filter_map(|i| {
            if all >> i & 1 == 1 {
                Some((i, true))
            } else if any >> i & 1 == 0 {
                Some((i, false))
            } else {
                None
            }
        })
        .collect()
}

/// Exact cluster-count change from clamping a variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExactDelta {
    Finite(f64),
    /// No cluster survives the clamp.
    Infinite,
}

impl ExactDelta {
    pub fn value(self) -> f64 {
        match self {
            ExactDelta::Finite(d) => d,
            ExactDelta::Infinite => f64::INFINITY,
        }
    }
}

/// `ln(#clusters of f) - ln(#clusters of f with σ(var) = value)`.
pub fn exact_delta(f: &Formula, var: usize, value: bool, radius: usize) -> Result<ExactDelta> {
    let sols = solutions(f)?;
    if sols.is_empty() {
        return Err(Error::Unsatisfiable);
    }
    Ok(delta_from_solutions(&sols, f.n_vars(), var, value, radius))
}

/// [`exact_delta`] on an already materialized solution list.
pub fn delta_from_solutions(sols: &[u64], n_vars: usize, var: usize, value: bool, radius: usize) -> ExactDelta {
    let before = decompose_clusters(sols, n_vars, radius).len();
    let kept: Vec<u64> = sols
        .iter()
        .copied()
        .filter(|x| (x >> var & 1 == 1) == value)
        .collect();
    if kept.is_empty() {
        return ExactDelta::Infinite;
    }
    let after = decompose_clusters(&kept, n_vars, radius).len();
    ExactDelta::Finite((before as f64).ln() - (after as f64).ln())
}

/// All solutions, refusing formulas whose count exceeds [`DEFAULT_CAP`].
pub fn solutions(f: &Formula) -> Result<Vec<u64>> {
    let r = enumerate(f, DEFAULT_CAP)?;
    r.solutions.ok_or_else(|| {
        Error::InvalidConfig(format!(
            "{} solutions exceed the materialization cap {DEFAULT_CAP}",
            r.count
        ))
    })
}

/// Exact marginal P(σ(i) = true) for every variable.
pub fn exact_marginals(f: &Formula) -> Result<Vec<f64>> {
    let sols = solutions(f)?;
    if sols.is_empty() {
        return Err(Error::Unsatisfiable);
    }
    let n = sols.len() as f64;
    Ok((0..f.n_vars())
        .map(|i| sols.iter().filter(|&&x| x >> i & 1 == 1).count() as f64 / n)
        .collect())
}
