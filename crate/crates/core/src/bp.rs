//! Belief propagation on the factor graph of a CNF formula.
//!
//! Clause-to-variable messages `u` and variable-to-clause cavity messages `p`
//! are [`Belief2`] vectors in the variable's frame (`p_t` = weight of the
//! value *true*). A clause tells variable `i` that its satisfying value is
//! free, and that its violating value is allowed only when some other
//! literal of the clause is true:
//!
//! ```text
//! u(i,c) ∝ (1, 1 - x),    x = Π_{j ∈ c, j ≠ i} P[j violates c]
//! ```
//!
//! which for an all-positive clause is `u_T = 1 / (2 - p_F(j) p_F(k))`.
//!
//! The entropy at a fixed point is assembled from the per-variable
//! normalizers `Z1(i) = |Π_{c ∋ i} u(i,c)|` (with the unnormalized clause
//! messages above) and the per-clause satisfaction probabilities
//! `Z2(c) = 1 - Π_{j ∈ c} P[j violates c]`:
//!
//! ```text
//! S = Σ_i ln Z1(i) - Σ_c (|c| - 1) ln Z2(c)
//! ```
//!
//! This is exact on tree factor graphs and stationary with respect to the
//! cavity messages.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Formula;
use crate::rng;
use crate::schedule::{prefetch, sweep_order, LogProduct, UpdateOrder, PREFETCH_DISTANCE, TINY};

/// A normalized pair of probabilities for *true* / *false*.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief2 {
    pub p_t: f64,
    pub p_f: f64,
}

impl Belief2 {
    pub const UNIFORM: Belief2 = Belief2 { p_t: 0.5, p_f: 0.5 };
    pub const TRUE: Belief2 = Belief2 { p_t: 1.0, p_f: 0.0 };
    pub const FALSE: Belief2 = Belief2 { p_t: 0.0, p_f: 1.0 };

    pub fn new(p_t: f64, p_f: f64) -> Self {
        Belief2 { p_t, p_f }
    }

    /// `|a| = a_T + a_F`.
    pub fn norm(self) -> f64 {
        self.p_t + self.p_f
    }

    pub fn normalized(self) -> Result<Belief2> {
        let z = self.norm();
        if !(z > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Belief2 {
            p_t: self.p_t / z,
            p_f: self.p_f / z,
        })
    }

    /// Componentwise product.
    pub fn product(self, o: Belief2) -> Belief2 {
        Belief2 {
            p_t: self.p_t * o.p_t,
            p_f: self.p_f * o.p_f,
        }
    }

    #[inline]
    pub fn get(self, value: bool) -> f64 {
        if value {
            self.p_t
        } else {
            self.p_f
        }
    }

    /// Probability that a literal with signature `negated` is false.
    #[inline]
    pub fn violation(self, negated: bool) -> f64 {
        if negated {
            self.p_t
        } else {
            self.p_f
        }
    }
}

/// Normalized clause message for a receiving literal with signature
/// `negated`, given the product `x` of the other literals' violation
/// probabilities.
#[inline]
fn message_from_violation(x: f64, negated: bool) -> Belief2 {
    let sat = 1.0 / (2.0 - x);
    let viol = 1.0 - sat;
    if negated {
        Belief2 { p_t: viol, p_f: sat }
    } else {
        Belief2 { p_t: sat, p_f: viol }
    }
}

/// Message from a 3-clause to its first variable given the cavity beliefs of
/// the other two. `signatures[k]` is the negation flag of literal `k`.
pub fn bp_u_message(p2: Belief2, p3: Belief2, signatures: [bool; 3]) -> Belief2 {
    let x = p2.violation(signatures[1]) * p3.violation(signatures[2]);
    message_from_violation(x, signatures[0])
}

/// Cavity belief from the incoming clause messages (clause `c` excluded by
/// the caller). No messages gives the uniform belief.
pub fn bp_variable_update(incoming: &[Belief2]) -> Result<Belief2> {
    incoming
        .iter()
        .fold(Belief2::new(1.0, 1.0), |acc, &u| acc.product(u))
        .normalized()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    /// Weight of the old message in the damped update, in `[0, 1)`.
    pub damping: f64,
    /// Convergence threshold on the largest message change in a sweep.
    pub tol: f64,
    pub max_iters: usize,
    pub update_order: UpdateOrder,
    pub rng_seed: u64,
    /// Initial `u_T` drawn uniformly from `1/2 ± init_spread`.
    pub init_spread: f64,
    /// Jacobi sweeps: every clause reads the previous sweep's messages and
    /// clauses are updated concurrently.
    pub parallel: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            damping: 0.0,
            tol: 1e-7,
            max_iters: 1000,
            update_order: UpdateOrder::RandomPermutation,
            rng_seed: 0,
            init_spread: 0.01,
            parallel: false,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(0.0..0.5).contains(&self.init_spread) {
            return Err(Error::InvalidConfig(format!(
                "init_spread must lie in [0, 0.5), got {}",
                self.init_spread
            )));
        }
        Ok(())
    }
}

/// Per-edge messages, indexed by the formula's edge numbering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpMessages {
    /// Clause → variable.
    pub u: Vec<Belief2>,
    /// Variable → clause (cavity beliefs).
    pub p: Vec<Belief2>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BpResult {
    pub converged: bool,
    pub iters: usize,
    /// Largest `u` change in the last sweep.
    pub residual: f64,
    /// Bethe entropy in nats; `None` after a contradiction.
    pub entropy: Option<f64>,
    pub marginals: Vec<Belief2>,
    /// Variable whose incoming messages became incompatible.
    pub contradiction: Option<usize>,
    pub messages: BpMessages,
}

struct Totals {
    t: Vec<LogProduct>,
    f: Vec<LogProduct>,
}

impl Totals {
    fn build(formula: &Formula, u: &[Belief2]) -> Totals {
        let n = formula.n_vars();
        let mut t = vec![LogProduct::ONE; n];
        let mut f = vec![LogProduct::ONE; n];
        for (e, m) in u.iter().enumerate() {
            let i = formula.edge_literal(e).var;
            t[i].mul(m.p_t);
            f[i].mul(m.p_f);
        }
        Totals { t, f }
    }

    /// Cavity belief of variable `i` with message `u_e` removed.
    #[inline]
    fn cavity(&self, i: usize, u_e: Belief2) -> Option<Belief2> {
        let ct = self.t[i].without(u_e.p_t);
        let cf = self.f[i].without(u_e.p_f);
        combine(ct, cf)
    }

    #[inline]
    fn full(&self, i: usize) -> Option<Belief2> {
        combine(self.t[i], self.f[i])
    }
}

#[inline]
fn combine(t: LogProduct, f: LogProduct) -> Option<Belief2> {
    match (t.zeros > 0, f.zeros > 0) {
        (true, true) => None,
        (true, false) => Some(Belief2::FALSE),
        (false, true) => Some(Belief2::TRUE),
        (false, false) => {
            let p_t = 1.0 / (1.0 + (f.log - t.log).exp());
            Some(Belief2 {
                p_t,
                p_f: 1.0 - p_t,
            })
        }
    }
}

/// Product of `values` skipping index `skip`.
#[inline]
fn product_except(values: &[f64], skip: usize) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != skip)
        .map(|(_, v)| v)
        .product()
}

/// Per-edge data of a sequential sweep, packed so that visiting a clause
/// touches one contiguous run of memory.
#[derive(Clone, Copy, Debug)]
struct Slot {
    /// `u_T`; `u_F` is `1 - u_T`.
    p_t: f64,
    /// `ln(u_T / u_F)`.
    l: f64,
    var: u32,
    negated: bool,
}

impl Slot {
    #[inline]
    fn u(&self) -> Belief2 {
        Belief2 {
            p_t: self.p_t,
            p_f: 1.0 - self.p_t,
        }
    }
}

/// One in-place sweep over the clauses in `order`; returns the largest
/// message change or the variable of a contradiction.
fn sequential_sweep(
    formula: &Formula,
    slots: &mut [Slot],
    fields: &mut Vec<Field>,
    order: &[usize],
    damping: f64,
) -> std::result::Result<f64, usize> {
    fields.clear();
    fields.resize(formula.n_vars(), Field::default());
    for s in slots.iter() {
        fields[s.var as usize].add(s.l);
    }
    let mut viol = [0.0; 8];
    let mut viol_vec = Vec::new();
    let mut residual = 0.0f64;
    // Gathering the edge ranges first turns the random reads of the
    // clause offsets into independent loads.
    let spans: Vec<(u32, u32)> = order
        .iter()
        .map(|&c| {
            let r = formula.clause_edges(c);
            (r.start as u32, r.end as u32)
        })
        .collect();
    for (k, &(start, end)) in spans.iter().enumerate() {
        if let Some(&(ahead, _)) = spans.get(k + PREFETCH_DISTANCE) {
            prefetch(&slots[ahead as usize]);
        }
        if let Some(&(a, b)) = spans.get(k + PREFETCH_DISTANCE / 2) {
            for s in &slots[a as usize..b as usize] {
                prefetch(&fields[s.var as usize]);
            }
        }
        let clause = &mut slots[start as usize..end as usize];
        let viol: &mut [f64] = if clause.len() <= viol.len() {
            &mut viol[..clause.len()]
        } else {
            viol_vec.resize(clause.len(), 0.0);
            &mut viol_vec
        };
        for (v, s) in viol.iter_mut().zip(clause.iter()) {
            let p = fields[s.var as usize].without(s.l).belief().ok_or(s.var as usize)?;
            *v = p.violation(s.negated);
        }
        for (k, s) in clause.iter_mut().enumerate() {
            let x = product_except(viol, k);
            let (new, new_l) = if damping == 0.0 {
                (message_from_violation(x, s.negated), violation_log_ratio(x, s.negated))
            } else {
                let b = damp(message_from_violation(x, s.negated), s.u(), damping);
                (b, log_ratio(b))
            };
            residual = residual.max(change(new, s.u()));
            let f = &mut fields[s.var as usize];
            f.remove(s.l);
            f.add(new_l);
            s.l = new_l;
            s.p_t = new.p_t;
        }
    }
    Ok(residual)
}

/// Sum of the log-ratios `ln(u_T / u_F)` of the messages reaching one
/// variable. Hard messages are counted instead of summed so that one can be
/// taken back out.
#[derive(Clone, Copy, Debug, Default)]
struct Field {
    sum: f64,
    hard_t: u32,
    hard_f: u32,
}

impl Field {
    #[inline]
    fn add(&mut self, l: f64) {
        if l == f64::INFINITY {
            self.hard_t += 1;
        } else if l == f64::NEG_INFINITY {
            self.hard_f += 1;
        } else {
            self.sum += l;
        }
    }

    #[inline]
    fn remove(&mut self, l: f64) {
        if l == f64::INFINITY {
            self.hard_t -= 1;
        } else if l == f64::NEG_INFINITY {
            self.hard_f -= 1;
        } else {
            self.sum -= l;
        }
    }

    #[inline]
    fn without(self, l: f64) -> Field {
        let mut f = self;
        f.remove(l);
        f
    }

    #[inline]
    fn belief(self) -> Option<Belief2> {
        match (self.hard_t > 0, self.hard_f > 0) {
            (true, true) => None,
            (true, false) => Some(Belief2::TRUE),
            (false, true) => Some(Belief2::FALSE),
            (false, false) => {
                let p_t = 1.0 / (1.0 + (-self.sum).exp());
                Some(Belief2 {
                    p_t,
                    p_f: 1.0 - p_t,
                })
            }
        }
    }
}

/// `ln(p_t / p_f)`, infinite for components below [`TINY`].
#[inline]
fn log_ratio(b: Belief2) -> f64 {
    if b.p_f < TINY {
        f64::INFINITY
    } else if b.p_t < TINY {
        f64::NEG_INFINITY
    } else {
        (b.p_t / b.p_f).ln()
    }
}

/// [`log_ratio`] of `message_from_violation(x, negated)` without forming
/// the ratio.
#[inline]
fn violation_log_ratio(x: f64, negated: bool) -> f64 {
    let viol = (1.0 - x) / (2.0 - x);
    let l = if viol < TINY { f64::INFINITY } else { -(-x).ln_1p() };
    if negated {
        -l
    } else {
        l
    }
}

#[inline]
fn damp(new: Belief2, old: Belief2, damping: f64) -> Belief2 {
    if damping == 0.0 {
        return new;
    }
    Belief2 {
        p_t: (1.0 - damping) * new.p_t + damping * old.p_t,
        p_f: (1.0 - damping) * new.p_f + damping * old.p_f,
    }
}

#[inline]
fn change(a: Belief2, b: Belief2) -> f64 {
    (a.p_t - b.p_t).abs().max((a.p_f - b.p_f).abs())
}

fn initial_messages(formula: &Formula, cfg: &BpConfig) -> Vec<Belief2> {
    let mut r = rng::rng_stream(cfg.rng_seed, u64::MAX);
    (0..formula.n_edges())
        .map(|_| {
            let t = if cfg.init_spread > 0.0 {
                0.5 + r.random_range(-cfg.init_spread..cfg.init_spread)
            } else {
                0.5
            };
            Belief2::new(t, 1.0 - t)
        })
        .collect()
}

/// Iterates the belief-propagation equations to a fixed point.
pub fn bp_iterate(formula: &Formula, cfg: &BpConfig, init: Option<&BpMessages>) -> Result<BpResult> {
    cfg.validate()?;
    formula.check_message_passing()?;
    let mut u = match init {
        Some(m) => {
            if m.u.len() != formula.n_edges() {
                return Err(Error::InvalidConfig(format!(
                    "initial messages cover {} edges, formula has {}",
                    m.u.len(),
                    formula.n_edges()
                )));
            }
            m.u.clone()
        }
        None => initial_messages(formula, cfg),
    };

    let m = formula.n_clauses();
    let mut order = Vec::with_capacity(m);
    let mut slots: Vec<Slot> = if cfg.parallel {
        Vec::new()
    } else {
        u.iter()
            .enumerate()
            .map(|(e, &b)| {
                let lit = formula.edge_literal(e);
                Slot {
                    p_t: b.p_t,
                    l: log_ratio(b),
                    var: lit.var as u32,
                    negated: lit.negated,
                }
            })
            .collect()
    };
    let mut fields = Vec::new();
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut contradiction = None;
    let mut iters = 0;

    while iters < cfg.max_iters {
        iters += 1;
        residual = 0.0;
        if cfg.parallel {
            let totals = Totals::build(formula, &u);
            match jacobi_sweep(formula, &mut u, &totals, cfg.damping) {
                Ok(r) => residual = r,
                Err(var) => {
                    contradiction = Some(var);
                    break;
                }
            }
        } else {
            sweep_order(&mut order, m, cfg.update_order, cfg.rng_seed, iters);
            match sequential_sweep(formula, &mut slots, &mut fields, &order, cfg.damping) {
                Ok(r) => residual = r,
                Err(var) => contradiction = Some(var),
            }
            if contradiction.is_some() {
                break;
            }
        }
        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }
    if !cfg.parallel {
        for (ue, slot) in u.iter_mut().zip(&slots) {
            *ue = slot.u();
        }
    }

    let totals = Totals::build(formula, &u);
    let mut p = Vec::with_capacity(formula.n_edges());
    if contradiction.is_none() {
        for (e, &ue) in u.iter().enumerate() {
            let i = formula.edge_literal(e).var;
            match totals.cavity(i, ue) {
                Some(b) => p.push(b),
                None => {
                    contradiction = Some(i);
                    break;
                }
            }
        }
    }
    let mut marginals = Vec::new();
    let mut entropy = None;
    if contradiction.is_none() {
        match marginals_from_totals(&totals) {
            Ok(mg) => marginals = mg,
            Err(var) => contradiction = Some(var),
        }
    }
    if contradiction.is_none() {
        match bethe_entropy(formula, &p) {
            Ok(s) => entropy = Some(s),
            Err(Error::Contradiction { var }) => contradiction = Some(var),
            Err(e) => return Err(e),
        }
    }
    if contradiction.is_some() {
        converged = false;
        p.resize(formula.n_edges(), Belief2::UNIFORM);
    }
    Ok(BpResult {
        converged,
        iters,
        residual,
        entropy,
        marginals,
        contradiction,
        messages: BpMessages { u, p },
    })
}

fn jacobi_sweep(
    formula: &Formula,
    u: &mut [Belief2],
    totals: &Totals,
    damping: f64,
) -> std::result::Result<f64, usize> {
    const NONE: usize = usize::MAX;
    let bad = AtomicUsize::new(NONE);
    let prev: &[Belief2] = u;
    let fresh: Vec<Belief2> = (0..formula.n_edges())
        .into_par_iter()
        .map(|e| {
            let c = formula.edge_clause(e);
            let mut x = 1.0;
            for e2 in formula.clause_edges(c) {
                if e2 == e {
                    continue;
                }
                let lit = formula.edge_literal(e2);
                match totals.cavity(lit.var, prev[e2]) {
                    Some(p) => x *= p.violation(lit.negated),
                    None => {
                        bad.store(lit.var, Ordering::Relaxed);
                        return prev[e];
                    }
                }
            }
            damp(
                message_from_violation(x, formula.edge_literal(e).negated),
                prev[e],
                damping,
            )
        })
        .collect();
    let var = bad.load(Ordering::Relaxed);
    if var != NONE {
        return Err(var);
    }
    let residual = fresh
        .iter()
        .zip(u.iter())
        .map(|(&a, &b)| change(a, b))
        .fold(0.0, f64::max);
    u.copy_from_slice(&fresh);
    Ok(residual)
}

fn marginals_from_totals(totals: &Totals) -> std::result::Result<Vec<Belief2>, usize> {
    (0..totals.t.len())
        .map(|i| totals.full(i).ok_or(i))
        .collect()
}

/// Full (non-cavity) beliefs: the product of all incoming clause messages.
pub fn bp_marginals(formula: &Formula, messages: &BpMessages) -> Result<Vec<Belief2>> {
    marginals_from_totals(&Totals::build(formula, &messages.u)).map_err(|var| Error::Contradiction { var })
}

/// Bethe entropy as a function of the cavity beliefs `p` (one per edge).
pub fn bethe_entropy(formula: &Formula, p: &[Belief2]) -> Result<f64> {
    let n = formula.n_vars();
    let mut t = vec![LogProduct::ONE; n];
    let mut f = vec![LogProduct::ONE; n];
    let mut entropy = 0.0;
    let mut viol = Vec::with_capacity(3);
    for c in 0..formula.n_clauses() {
        viol.clear();
        for e in formula.clause_edges(c) {
            viol.push(p[e].violation(formula.edge_literal(e).negated));
        }
        let all: f64 = viol.iter().product();
        let z2 = 1.0 - all;
        if !(z2 > 0.0) {
            let var = formula.edge_literal(formula.clause_edges(c).start).var;
            return Err(Error::Contradiction { var });
        }
        entropy -= (viol.len() as f64 - 1.0) * z2.ln();
        for (k, e) in formula.clause_edges(c).enumerate() {
            let lit = formula.edge_literal(e);
            let allowed = 1.0 - product_except(&viol, k);
            if lit.negated {
                t[lit.var].mul(allowed);
            } else {
                f[lit.var].mul(allowed);
            }
        }
    }
    for i in 0..n {
        entropy += log_sum(t[i], f[i]).ok_or(Error::Contradiction { var: i })?;
    }
    Ok(entropy)
}

/// `ln(a + b)` for two log-domain products; `None` when both vanish.
#[inline]
pub(crate) fn log_sum(a: LogProduct, b: LogProduct) -> Option<f64> {
    match (a.zeros > 0, b.zeros > 0) {
        (true, true) => None,
        (true, false) => Some(b.log),
        (false, true) => Some(a.log),
        (false, false) => {
            let (hi, lo) = if a.log >= b.log { (a.log, b.log) } else { (b.log, a.log) };
            Some(hi + (lo - hi).exp().ln_1p())
        }
    }
}

/// Entropy of a converged message state.
pub fn bp_entropy(formula: &Formula, messages: &BpMessages) -> Result<f64> {
    bethe_entropy(formula, &messages.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random, Clause, Literal};

    const ALL_POS: [bool; 3] = [false, false, false];

    #[test]
    fn u_message_examples() {
        let u = bp_u_message(Belief2::FALSE, Belief2::FALSE, ALL_POS);
        assert_eq!(u.p_t, 1.0);
        let u = bp_u_message(Belief2::TRUE, Belief2::TRUE, ALL_POS);
        assert_eq!(u.p_t, 0.5);
        let u = bp_u_message(Belief2::UNIFORM, Belief2::UNIFORM, ALL_POS);
        assert!((u.p_t - 4.0 / 7.0).abs() < 1e-15);
        assert!((u.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn u_message_sign_exchange() {
        // negating the receiver swaps T and F
        let a = bp_u_message(Belief2::new(0.3, 0.7), Belief2::new(0.6, 0.4), [false, false, false]);
        let b = bp_u_message(Belief2::new(0.3, 0.7), Belief2::new(0.6, 0.4), [true, false, false]);
        assert_eq!(a.p_t, b.p_f);
        // negating a sender swaps the component it contributes
        let c = bp_u_message(Belief2::new(0.7, 0.3), Belief2::new(0.6, 0.4), [false, true, false]);
        assert!((a.p_t - c.p_t).abs() < 1e-15);
    }

    #[test]
    fn variable_update_examples() {
        assert_eq!(bp_variable_update(&[]).unwrap(), Belief2::UNIFORM);
        assert_eq!(bp_variable_update(&[Belief2::TRUE]).unwrap(), Belief2::TRUE);
        assert_eq!(
            bp_variable_update(&[Belief2::TRUE, Belief2::FALSE]),
            Err(Error::ZeroNorm)
        );
    }

    #[test]
    fn empty_formula_entropy() {
        let f = Formula::new(6, vec![]).unwrap();
        let r = bp_iterate(&f, &BpConfig::default(), None).unwrap();
        assert!(r.converged);
        assert!((r.entropy.unwrap() - 6.0 * 2f64.ln()).abs() < 1e-12);
        assert!(r.marginals.iter().all(|&m| m == Belief2::UNIFORM));
    }

    #[test]
    fn single_clause_entropy_is_ln7() {
        let f = Formula::new(
            3,
            vec![Clause::new(vec![Literal::pos(0), Literal::pos(1), Literal::pos(2)])],
        )
        .unwrap();
        let r = bp_iterate(&f, &BpConfig::default(), None).unwrap();
        assert!(r.converged);
        assert!((r.entropy.unwrap() - 7f64.ln()).abs() < 1e-12);
        assert!((r.marginals[0].p_t - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn unit_clause_forces_marginal() {
        let f = Formula::new(
            4,
            vec![
                Clause::new(vec![Literal::neg(0)]),
                Clause::new(vec![Literal::pos(0), Literal::pos(1), Literal::neg(2)]),
            ],
        )
        .unwrap();
        let r = bp_iterate(&f, &BpConfig::default(), None).unwrap();
        assert!(r.converged);
        assert_eq!(r.marginals[0], Belief2::FALSE);
        assert_eq!(r.marginals[3], Belief2::UNIFORM);
        // 2 (x3) * 3 (x1, x2 not both "false, true")
        assert!((r.entropy.unwrap() - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn contradiction_is_reported() {
        let f = Formula::new(
            1,
            vec![
                Clause::new(vec![Literal::pos(0)]),
                Clause::new(vec![Literal::neg(0)]),
            ],
        )
        .unwrap();
        let r = bp_iterate(&f, &BpConfig::default(), None).unwrap();
        assert!(!r.converged);
        assert_eq!(r.contradiction, Some(0));
        assert!(r.entropy.is_none());
    }

    #[test]
    fn rejects_bad_config_and_formula() {
        let f = generate_random(10, 2.0, 1).unwrap();
        let cfg = BpConfig {
            damping: 1.0,
            ..BpConfig::default()
        };
        assert!(matches!(bp_iterate(&f, &cfg, None), Err(Error::InvalidConfig(_))));
        let g = Formula::new(2, vec![Clause::new(vec![Literal::pos(0), Literal::neg(0)])]).unwrap();
        assert!(matches!(
            bp_iterate(&g, &BpConfig::default(), None),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn messages_stay_normalized_and_deterministic() {
        let f = generate_random(400, 3.0, 3).unwrap();
        let cfg = BpConfig {
            rng_seed: 11,
            ..BpConfig::default()
        };
        let a = bp_iterate(&f, &cfg, None).unwrap();
        let b = bp_iterate(&f, &cfg, None).unwrap();
        assert!(a.converged);
        assert_eq!(a.messages, b.messages);
        assert_eq!(a.iters, b.iters);
        for m in a.messages.u.iter().chain(&a.messages.p).chain(&a.marginals) {
            assert!(m.p_t >= 0.0 && m.p_f >= 0.0);
            assert!((m.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn damping_preserves_fixed_points() {
        let f = generate_random(500, 3.0, 8).unwrap();
        let cfg = BpConfig {
            tol: 1e-12,
            rng_seed: 2,
            ..BpConfig::default()
        };
        let r = bp_iterate(&f, &cfg, None).unwrap();
        assert!(r.converged);
        for damping in [0.0, 0.3, 0.9] {
            let again = bp_iterate(
                &f,
                &BpConfig {
                    damping,
                    max_iters: 3,
                    ..cfg.clone()
                },
                Some(&r.messages),
            )
            .unwrap();
            assert!(again.converged, "damping {damping}: residual {}", again.residual);
            assert_eq!(again.iters, 1);
        }
    }

    #[test]
    fn jacobi_mode_reaches_same_fixed_point() {
        let f = generate_random(300, 2.5, 5).unwrap();
        let seq = bp_iterate(&f, &BpConfig { tol: 1e-10, ..BpConfig::default() }, None).unwrap();
        let par = bp_iterate(
            &f,
            &BpConfig {
                tol: 1e-10,
                parallel: true,
                damping: 0.2,
                ..BpConfig::default()
            },
            None,
        )
        .unwrap();
        assert!(seq.converged && par.converged);
        assert!((seq.entropy.unwrap() - par.entropy.unwrap()).abs() < 1e-6);
        for m in &par.messages.u {
            assert!((m.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_is_stationary_in_cavity_messages() {
        let f = generate_random(200, 2.0, 4).unwrap();
        let r = bp_iterate(&f, &BpConfig { tol: 1e-13, ..BpConfig::default() }, None).unwrap();
        assert!(r.converged);
        let h = 1e-6;
        let mut p = r.messages.p.clone();
        for e in (0..f.n_edges()).step_by(7) {
            let orig = p[e];
            p[e] = Belief2::new(orig.p_t + h, orig.p_f - h);
            let up = bethe_entropy(&f, &p).unwrap();
            p[e] = Belief2::new(orig.p_t - h, orig.p_f + h);
            let down = bethe_entropy(&f, &p).unwrap();
            p[e] = orig;
            let grad = (up - down) / (2.0 * h);
            assert!(grad.abs() <= 1e-4, "edge {e}: gradient {grad}");
        }
    }
}
