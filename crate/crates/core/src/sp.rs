//! Survey propagation.
//!
//! A survey `s = (s_T, s_I, s_F)` gives, over the solutions of the
//! belief-propagation equations, the weight of a cavity belief fixed to
//! *true*, left undetermined, or fixed to *false*. A clause warns one of its
//! variables (pushes it to its satisfying value) when every other literal is
//! forced false:
//!
//! ```text
//! u(i,c) = {w, 1 - w, 0}   (positive literal; {0, 1 - w, w} if negated)
//! w      = Π_{j ∈ c, j ≠ i} P[s(j,c) forces j to violate c]
//! ```
//!
//! Messages combine with the product of [`sp_product`], which drops the
//! contradictory T×F terms; its identity is `{0, 1, 0}`. Since `T + I` and
//! `F + I` are multiplicative under that product, the engine keeps per
//! variable the log-products of `1 - w` over warnings toward each value.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Formula;
use crate::rng;
use crate::schedule::{ln_factor, prefetch, sweep_order, LogProduct, UpdateOrder, PREFETCH_DISTANCE};

/// Components below this are snapped to zero after normalization.
pub const SNAP: f64 = 1e-15;
/// A fixed point is trivial when no survey puts more than this on T or F.
pub const TRIVIAL_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Survey3 {
    pub s_t: f64,
    pub s_i: f64,
    pub s_f: f64,
}

/// Clause → variable message; a [`Survey3`] with `s_t * s_f == 0`.
pub type SpUMessage = Survey3;

impl Survey3 {
    pub const IDENTITY: Survey3 = Survey3 {
        s_t: 0.0,
        s_i: 1.0,
        s_f: 0.0,
    };
    pub const TRUE: Survey3 = Survey3 {
        s_t: 1.0,
        s_i: 0.0,
        s_f: 0.0,
    };
    pub const FALSE: Survey3 = Survey3 {
        s_t: 0.0,
        s_i: 0.0,
        s_f: 1.0,
    };

    pub fn new(s_t: f64, s_i: f64, s_f: f64) -> Self {
        Survey3 { s_t, s_i, s_f }
    }

    pub fn norm(self) -> f64 {
        self.s_t + self.s_i + self.s_f
    }

    /// Normalizes by the component sum and snaps components below [`SNAP`].
    pub fn normalized(self) -> Result<Survey3> {
        let z = self.norm();
        if !(z > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Survey3::new(self.s_t / z, self.s_i / z, self.s_f / z).snapped())
    }

    fn snapped(self) -> Survey3 {
        let cut = |x: f64| if x < SNAP { 0.0 } else { x };
        let s = Survey3::new(cut(self.s_t), cut(self.s_i), cut(self.s_f));
        if s == self {
            return s;
        }
        let z = s.norm();
        Survey3::new(s.s_t / z, s.s_i / z, s.s_f / z)
    }

    /// Mass on the value that violates a literal with signature `negated`.
    #[inline]
    pub fn violation(self, negated: bool) -> f64 {
        if negated {
            self.s_t
        } else {
            self.s_f
        }
    }

    /// Warning of strength `w` toward the satisfying value of a literal.
    #[inline]
    pub fn warning(w: f64, negated: bool) -> SpUMessage {
        if negated {
            Survey3::new(0.0, 1.0 - w, w)
        } else {
            Survey3::new(w, 1.0 - w, 0.0)
        }
    }

    /// `s_T + s_F`.
    pub fn polarized(self) -> f64 {
        self.s_t + self.s_f
    }

    /// `s_T - s_F`.
    pub fn bias(self) -> f64 {
        self.s_t - self.s_f
    }
}

/// `{a_T b_T + a_I b_T + a_T b_I, a_I b_I, a_F b_F + a_I b_F + a_F b_I}`.
pub fn sp_product(a: Survey3, b: Survey3) -> Survey3 {
    Survey3 {
        s_t: a.s_t * b.s_t + a.s_i * b.s_t + a.s_t * b.s_i,
        s_i: a.s_i * b.s_i,
        s_f: a.s_f * b.s_f + a.s_i * b.s_f + a.s_f * b.s_i,
    }
}

/// Message from a 3-clause to its first variable given the surveys of the
/// other two; `signatures[k]` is the negation flag of literal `k`.
pub fn sp_u_message(s2: Survey3, s3: Survey3, signatures: [bool; 3]) -> SpUMessage {
    let w = s2.violation(signatures[1]) * s3.violation(signatures[2]);
    Survey3::warning(w, signatures[0])
}

/// Normalized product of incoming messages; `{0, 1, 0}` when there are none.
pub fn sp_variable_update(incoming: &[SpUMessage]) -> Result<Survey3> {
    incoming
        .iter()
        .fold(Survey3::IDENTITY, |acc, &u| sp_product(acc, u))
        .normalized()
}

/// Survey from the probabilities of receiving no warning toward true
/// (`pi_t`) and toward false (`pi_f`).
#[inline]
pub(crate) fn survey_from_pi(pi_t: f64, pi_f: f64) -> Option<Survey3> {
    let z = pi_t + pi_f - pi_t * pi_f;
    if !(z > 0.0) {
        return None;
    }
    Some(
        Survey3::new((1.0 - pi_t) * pi_f / z, pi_t * pi_f / z, (1.0 - pi_f) * pi_t / z)
            .snapped(),
    )
}

#[inline]
fn snap_warning(w: f64) -> f64 {
    if w < SNAP {
        0.0
    } else if 1.0 - w < SNAP {
        1.0
    } else {
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub update_order: UpdateOrder,
    pub rng_seed: u64,
    /// Initial warnings drawn uniformly from `[0, init_max_warning]`.
    pub init_max_warning: f64,
    pub parallel: bool,
}

impl Default for SpConfig {
    fn default() -> Self {
        SpConfig {
            damping: 0.0,
            tol: 1e-3,
            max_iters: 1000,
            update_order: UpdateOrder::RandomPermutation,
            rng_seed: 0,
            init_max_warning: 0.5,
            parallel: false,
        }
    }
}

impl SpConfig {
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
        if !(0.0..=1.0).contains(&self.init_max_warning) {
            return Err(Error::InvalidConfig(format!(
                "init_max_warning must lie in [0, 1], got {}",
                self.init_max_warning
            )));
        }
        Ok(())
    }
}

/// Per-edge surveys (variable → clause) and warnings (clause → variable).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpEdgeState {
    pub s: Vec<Survey3>,
    pub u: Vec<SpUMessage>,
}

impl SpEdgeState {
    /// The all-`{0,1,0}` state.
    pub fn trivial(formula: &Formula) -> Self {
        SpEdgeState {
            s: vec![Survey3::IDENTITY; formula.n_edges()],
            u: vec![Survey3::IDENTITY; formula.n_edges()],
        }
    }

    /// Warning strengths `w` of the `u` messages.
    pub fn warnings(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.s_t + u.s_f).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpResult {
    pub converged: bool,
    /// Every survey within [`TRIVIAL_THRESHOLD`] of `{0,1,0}`.
    pub trivial: bool,
    pub iters: usize,
    pub residual: f64,
    /// Reduced complexity Σ_R in nats; `None` after a contradiction.
    pub complexity: Option<f64>,
    /// Σ_R / N.
    pub complexity_density: Option<f64>,
    /// Full (non-cavity) normalized product at every variable.
    pub biases: Vec<Survey3>,
    /// `W_T - W_F` per variable.
    pub polarization: Vec<f64>,
    pub contradiction: Option<usize>,
    pub state: SpEdgeState,
}

/// Per-variable log-products of `1 - w` over warnings toward true (`t`) and
/// toward false (`f`).
struct Totals {
    t: Vec<LogProduct>,
    f: Vec<LogProduct>,
}

impl Totals {
    fn build(formula: &Formula, w: &[f64]) -> Totals {
        let n = formula.n_vars();
        let mut t = vec![LogProduct::ONE; n];
        let mut f = vec![LogProduct::ONE; n];
        for (e, &we) in w.iter().enumerate() {
            let lit = formula.edge_literal(e);
            if lit.negated {
                f[lit.var].mul(1.0 - we);
            } else {
                t[lit.var].mul(1.0 - we);
            }
        }
        Totals { t, f }
    }

    /// Cavity survey of the variable of edge `e` with its warning `w_e`
    /// removed.
    #[inline]
    fn cavity(&self, formula: &Formula, e: usize, w_e: f64) -> Option<Survey3> {
        let lit = formula.edge_literal(e);
        let (t, f) = if lit.negated {
            (self.t[lit.var], self.f[lit.var].without(1.0 - w_e))
        } else {
            (self.t[lit.var].without(1.0 - w_e), self.f[lit.var])
        };
        survey_from_pi(t.value(), f.value())
    }

    #[inline]
    fn full(&self, i: usize) -> Option<Survey3> {
        survey_from_pi(self.t[i].value(), self.f[i].value())
    }
}

#[inline]
fn product_except(values: &[f64], skip: usize) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != skip)
        .map(|(_, v)| v)
        .product()
}

fn initial_warnings(formula: &Formula, cfg: &SpConfig) -> Vec<f64> {
    let mut r = rng::rng_stream(cfg.rng_seed, u64::MAX);
    (0..formula.n_edges())
        .map(|_| {
            if cfg.init_max_warning > 0.0 {
                r.random_range(0.0..cfg.init_max_warning)
            } else {
                0.0
            }
        })
        .collect()
}

/// Iterates the survey-propagation equations.
pub fn sp_iterate(formula: &Formula, cfg: &SpConfig, init: Option<&SpEdgeState>) -> Result<SpResult> {
    cfg.validate()?;
    formula.check_message_passing()?;
    let w0 = match init {
        Some(st) => {
            if st.u.len() != formula.n_edges() {
                return Err(Error::InvalidConfig(format!(
                    "initial state covers {} edges, formula has {}",
                    st.u.len(),
                    formula.n_edges()
                )));
            }
            st.warnings()
        }
        None => initial_warnings(formula, cfg),
    };
    sp_iterate_warnings(formula, cfg, w0)
}

/// [`sp_iterate`] from explicit initial warning strengths, one per edge.
pub fn sp_iterate_warnings(formula: &Formula, cfg: &SpConfig, mut w: Vec<f64>) -> Result<SpResult> {
    cfg.validate()?;
    formula.check_message_passing()?;
    let m = formula.n_clauses();
    let mut order = Vec::with_capacity(m);
    let mut slots: Vec<Slot> = if cfg.parallel {
        Vec::new()
    } else {
        w.iter()
            .enumerate()
            .map(|(e, &we)| {
                let lit = formula.edge_literal(e);
                Slot {
                    w: we,
                    ln_q: ln_factor(1.0 - we),
                    var: lit.var as u32,
                    negated: lit.negated,
                }
            })
            .collect()
    };
    let mut sides = Vec::new();
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut contradiction = None;
    let mut iters = 0;

    while iters < cfg.max_iters {
        iters += 1;
        residual = 0.0;
        if cfg.parallel {
            let totals = Totals::build(formula, &w);
            match jacobi_sweep(formula, &mut w, &totals, cfg.damping) {
                Ok(r) => residual = r,
                Err(var) => {
                    contradiction = Some(var);
                    break;
                }
            }
        } else {
            sweep_order(&mut order, m, cfg.update_order, cfg.rng_seed, iters);
            match sequential_sweep(formula, &mut slots, &mut sides, &order, cfg.damping) {
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
        for (we, slot) in w.iter_mut().zip(&slots) {
            *we = slot.w;
        }
    }
    Ok(finish(formula, w, converged, iters, residual, contradiction))
}

/// Per-edge data of a sequential sweep, packed so that visiting a clause
/// touches one contiguous run of memory.
#[derive(Clone, Copy, Debug)]
struct Slot {
    w: f64,
    /// `ln(1 - w)`, `-inf` when `1 - w` counts as zero.
    ln_q: f64,
    var: u32,
    negated: bool,
}

/// `Π (1 - w)` over the warnings toward true (`t`) and toward false (`f`)
/// reaching one variable.
#[derive(Clone, Copy, Debug, Default)]
struct Sides {
    t: LogProduct,
    f: LogProduct,
}

impl Sides {
    #[inline]
    fn side(&mut self, negated: bool) -> &mut LogProduct {
        if negated {
            &mut self.f
        } else {
            &mut self.t
        }
    }
}

/// One in-place sweep over the clauses in `order`; returns the largest
/// warning change or the variable of a contradiction.
fn sequential_sweep(
    formula: &Formula,
    slots: &mut [Slot],
    sides: &mut Vec<Sides>,
    order: &[usize],
    damping: f64,
) -> std::result::Result<f64, usize> {
    sides.clear();
    sides.resize(formula.n_vars(), Sides::default());
    for s in slots.iter() {
        sides[s.var as usize].side(s.negated).mul_ln(s.ln_q);
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
                prefetch(&sides[s.var as usize]);
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
            let mut sd = sides[s.var as usize];
            sd.side(s.negated).div_ln(s.ln_q);
            let cav = survey_from_pi(sd.t.value(), sd.f.value()).ok_or(s.var as usize)?;
            *v = cav.violation(s.negated);
        }
        for (k, s) in clause.iter_mut().enumerate() {
            let fresh = snap_warning(product_except(viol, k));
            let new = if damping == 0.0 {
                fresh
            } else {
                (1.0 - damping) * fresh + damping * s.w
            };
            residual = residual.max((new - s.w).abs());
            if new != s.w {
                let ln_q = ln_factor(1.0 - new);
                let side = sides[s.var as usize].side(s.negated);
                side.div_ln(s.ln_q);
                side.mul_ln(ln_q);
                s.ln_q = ln_q;
                s.w = new;
            }
        }
    }
    Ok(residual)
}

fn jacobi_sweep(
    formula: &Formula,
    w: &mut [f64],
    totals: &Totals,
    damping: f64,
) -> std::result::Result<f64, usize> {
    const NONE: usize = usize::MAX;
    let bad = AtomicUsize::new(NONE);
    let prev: &[f64] = w;
    let fresh: Vec<f64> = (0..formula.n_edges())
        .into_par_iter()
        .map(|e| {
            let c = formula.edge_clause(e);
            let mut x = 1.0;
            for e2 in formula.clause_edges(c) {
                if e2 == e {
                    continue;
                }
                let lit = formula.edge_literal(e2);
                match totals.cavity(formula, e2, prev[e2]) {
                    Some(s) => x *= s.violation(lit.negated),
                    None => {
                        bad.store(lit.var, Ordering::Relaxed);
                        return prev[e];
                    }
                }
            }
            (1.0 - damping) * snap_warning(x) + damping * prev[e]
        })
        .collect();
    let var = bad.load(Ordering::Relaxed);
    if var != NONE {
        return Err(var);
    }
    let residual = fresh
        .iter()
        .zip(w.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    w.copy_from_slice(&fresh);
    Ok(residual)
}

fn finish(
    formula: &Formula,
    w: Vec<f64>,
    mut converged: bool,
    iters: usize,
    residual: f64,
    mut contradiction: Option<usize>,
) -> SpResult {
    let totals = Totals::build(formula, &w);
    let n_edges = formula.n_edges();
    let mut s = Vec::with_capacity(n_edges);
    if contradiction.is_none() {
        for (e, &we) in w.iter().enumerate() {
            match totals.cavity(formula, e, we) {
                Some(x) => s.push(x),
                None => {
                    contradiction = Some(formula.edge_literal(e).var);
                    break;
                }
            }
        }
    }
    let mut biases = Vec::with_capacity(formula.n_vars());
    if contradiction.is_none() {
        for i in 0..formula.n_vars() {
            match totals.full(i) {
                Some(b) => biases.push(b),
                None => {
                    contradiction = Some(i);
                    break;
                }
            }
        }
    }
    let u: Vec<SpUMessage> = w
        .iter()
        .enumerate()
        .map(|(e, &we)| Survey3::warning(we, formula.edge_literal(e).negated))
        .collect();
    let mut complexity = None;
    if contradiction.is_none() {
        match reduced_complexity(formula, &s) {
            Ok(c) => complexity = Some(c),
            Err(Error::Contradiction { var }) => contradiction = Some(var),
            Err(_) => unreachable!("reduced_complexity only reports contradictions"),
        }
    }
    if contradiction.is_some() {
        converged = false;
        s.resize(n_edges, Survey3::IDENTITY);
        biases.resize(formula.n_vars(), Survey3::IDENTITY);
    }
    let trivial = contradiction.is_none() && s.iter().all(|x| x.polarized() <= TRIVIAL_THRESHOLD);
    let n = formula.n_vars().max(1) as f64;
    SpResult {
        converged,
        trivial,
        iters,
        residual,
        complexity,
        complexity_density: complexity.map(|c| c / n),
        polarization: biases.iter().map(|b| b.bias()).collect(),
        biases,
        contradiction,
        state: SpEdgeState { s, u },
    }
}

/// Σ_R as a function of the cavity surveys (one per edge):
/// `Σ_i ln Z1(i) - Σ_c (|c| - 1) ln Z2(c)` with `Z1(i) = |Π_{c ∋ i} u(i,c)|`
/// and `Z2(c) = 1 - Π_{j ∈ c} s_viol(j,c)`.
pub fn reduced_complexity(formula: &Formula, s: &[Survey3]) -> Result<f64> {
    let n = formula.n_vars();
    let mut t = vec![LogProduct::ONE; n];
    let mut f = vec![LogProduct::ONE; n];
    let mut total = 0.0;
    let mut viol = Vec::with_capacity(3);
    for c in 0..formula.n_clauses() {
        viol.clear();
        for e in formula.clause_edges(c) {
            viol.push(s[e].violation(formula.edge_literal(e).negated));
        }
        let z2 = 1.0 - viol.iter().product::<f64>();
        if !(z2 > 0.0) {
            let var = formula.edge_literal(formula.clause_edges(c).start).var;
            return Err(Error::Contradiction { var });
        }
        total -= (viol.len() as f64 - 1.0) * z2.ln();
        for (k, e) in formula.clause_edges(c).enumerate() {
            let lit = formula.edge_literal(e);
            let w = product_except(&viol, k);
            if lit.negated {
                f[lit.var].mul(1.0 - w);
            } else {
                t[lit.var].mul(1.0 - w);
            }
        }
    }
    for i in 0..n {
        total += ln_z1(t[i], f[i]).ok_or(Error::Contradiction { var: i })?;
    }
    Ok(total)
}

/// `ln(pi_t + pi_f - pi_t pi_f)` from log-domain products.
#[inline]
pub(crate) fn ln_z1(t: LogProduct, f: LogProduct) -> Option<f64> {
    match (t.zeros > 0, f.zeros > 0) {
        (true, true) => None,
        (true, false) => Some(f.log),
        (false, true) => Some(t.log),
        (false, false) => {
            let lse = crate::bp::log_sum(t, f).expect("both products nonzero");
            // 1 - pi_t pi_f / (pi_t + pi_f)
            Some(lse + (-(t.log + f.log - lse).exp()).ln_1p())
        }
    }
}

/// Total and per-variable reduced complexity of a state.
pub fn sp_complexity(formula: &Formula, state: &SpEdgeState) -> Result<(f64, f64)> {
    let total = reduced_complexity(formula, &state.s)?;
    Ok((total, total / formula.n_vars().max(1) as f64))
}
