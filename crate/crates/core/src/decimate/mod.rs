//! Survey-inspired decimation.
//!
//! Each step solves SP on the current formula, ranks the unassigned
//! variables by a local estimate `Δ̂` of the complexity lost when fixing
//! them, fixes the best ones to the value their surveys favour, and
//! simplifies. Once SP reaches its trivial fixed point (or every bias is
//! below a floor) the remaining formula is handed to WalkSAT.

mod walksat;

pub use walksat::{walksat, WalkSatConfig, WalkSatResult};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{simplify, Assignment, Formula, SimplifyStatus};
use crate::rng::{self, Rng};
use crate::schedule::LogProduct;
use crate::sp::{self, ln_z1, survey_from_pi, SpConfig, SpEdgeState, SpResult, Survey3};

/// Full SP bias of a variable: mass of clusters where it is frozen true,
/// free, or frozen false.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableBias {
    pub w_t: f64,
    pub w_i: f64,
    pub w_f: f64,
}

impl VariableBias {
    /// `w_t - w_f`.
    pub fn polarization(self) -> f64 {
        self.w_t - self.w_f
    }

    /// The favoured value, `None` on an exact tie.
    pub fn majority(self) -> Option<bool> {
        if self.w_t > self.w_f {
            Some(true)
        } else if self.w_f > self.w_t {
            Some(false)
        } else {
            None
        }
    }
}

impl From<Survey3> for VariableBias {
    fn from(s: Survey3) -> Self {
        VariableBias {
            w_t: s.s_t,
            w_i: s.s_i,
            w_f: s.s_f,
        }
    }
}

/// Per-variable log-products of `1 - w` over warnings toward true and
/// toward false.
fn warning_totals(f: &Formula, state: &SpEdgeState) -> (Vec<LogProduct>, Vec<LogProduct>) {
    let mut t = vec![LogProduct::ONE; f.n_vars()];
    let mut fl = vec![LogProduct::ONE; f.n_vars()];
    for (e, u) in state.u.iter().enumerate() {
        let var = f.edge_literal(e).var;
        t[var].mul(1.0 - u.s_t);
        fl[var].mul(1.0 - u.s_f);
    }
    (t, fl)
}

/// Normalized product of all warnings at each variable.
pub fn compute_biases(f: &Formula, state: &SpEdgeState) -> Result<Vec<VariableBias>> {
    let (t, fl) = warning_totals(f, state);
    (0..f.n_vars())
        .map(|i| {
            survey_from_pi(t[i].value(), fl[i].value())
                .map(VariableBias::from)
                .ok_or(Error::Contradiction { var: i })
        })
        .collect()
}

/// Precomputed SP quantities for evaluating [`delta_estimate`].
pub struct LocalComplexity<'a> {
    f: &'a Formula,
    s: &'a [Survey3],
    t: Vec<LogProduct>,
    fl: Vec<LogProduct>,
    /// Warning strength per edge.
    w: Vec<f64>,
    /// `ln Z1(i)` per variable, `-inf` on contradictory warnings.
    ln_z1: Vec<f64>,
    /// `ln Z2(c)` per clause.
    ln_z2: Vec<f64>,
}

impl<'a> LocalComplexity<'a> {
    pub fn new(f: &'a Formula, state: &'a SpEdgeState) -> Self {
        let (t, fl) = warning_totals(f, state);
        let ln_z1 = t
            .iter()
            .zip(&fl)
            .map(|(&t, &fl)| ln_z1(t, fl).unwrap_or(f64::NEG_INFINITY))
            .collect();
        let mut lc = LocalComplexity {
            f,
            s: &state.s,
            t,
            fl,
            w: state.warnings(),
            ln_z1,
            ln_z2: Vec::new(),
        };
        lc.ln_z2 = (0..f.n_clauses())
            .map(|c| (1.0 - lc.viol_product(c, usize::MAX, None)).ln())
            .collect();
        lc
    }

    fn viol(&self, e: usize) -> f64 {
        self.s[e].violation(self.f.edge_literal(e).negated)
    }

    /// `Π s_viol` over the edges of `c` other than those of variable `skip`.
    fn viol_product(&self, c: usize, skip: usize, except_edge: Option<usize>) -> f64 {
        self.f
            .clause_edges(c)
            .filter(|&e| self.f.edge_literal(e).var != skip && Some(e) != except_edge)
            .map(|e| self.viol(e))
            .product()
    }
}

/// Local estimate of `Σ(N) - Σ(N-1)` when variable `i` is fixed to `value`:
/// the node and clause terms of Σ_R on the clauses of `i` and their
/// variables, minus the same terms after clamping `s(i, ·)` to `value`
/// (clauses it satisfies disappear, the others lose the literal of `i`) and
/// removing `i`. Infinite when the clamp leaves a neighbour with
/// contradictory warnings.
pub fn delta_estimate(lc: &LocalComplexity<'_>, i: usize, value: bool) -> f64 {
    let f = lc.f;
    let mut current = lc.ln_z1[i];
    if current == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    // (var, T side, F side) of each neighbour after the clamp
    let mut after: Vec<(usize, LogProduct, LogProduct)> = Vec::with_capacity(2 * f.degree(i));
    let mut clamped = 0.0;
    for &ei in f.var_edges(i) {
        let c = f.edge_clause(ei);
        let k = f.clause_edges(c).len() as f64;
        current -= (k - 1.0) * lc.ln_z2[c];
        let satisfied = f.edge_literal(ei).is_satisfied_by(value);
        if !satisfied && k > 2.0 {
            let z2c = 1.0 - lc.viol_product(c, i, None);
            if !(z2c > 0.0) {
                return f64::INFINITY;
            }
            clamped -= (k - 2.0) * z2c.ln();
        }
        for e in f.clause_edges(c) {
            let l = f.edge_literal(e);
            if l.var == i {
                continue;
            }
            let slot = match after.iter().position(|x| x.0 == l.var) {
                Some(p) => p,
                None => {
                    after.push((l.var, lc.t[l.var], lc.fl[l.var]));
                    after.len() - 1
                }
            };
            let entry = &mut after[slot];
            let side = if l.negated { &mut entry.2 } else { &mut entry.1 };
            side.div(1.0 - lc.w[e]);
            if !satisfied {
                let w_new = lc.viol_product(c, i, Some(e));
                side.mul(1.0 - w_new);
            }
        }
    }
    for &(v, t2, f2) in &after {
        current += lc.ln_z1[v];
        match ln_z1(t2, f2) {
            Some(z) => clamped += z,
            None => return f64::INFINITY,
        }
    }
    current - clamped
}

/// How the next variables to fix are ranked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest `Δ̂` first; ties by larger `|w_t - w_f|`.
    #[default]
    MinDelta,
    /// Largest `|w_t - w_f|` first.
    MaxBias,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidConfig {
    pub sp: SpConfig,
    /// Fraction of the unassigned constrained variables fixed per SP
    /// solve, at least one. The default fixes a single variable.
    pub batch_fraction: f64,
    /// Hand over to local search once every `|w_t - w_f|` is below this.
    pub bias_floor: f64,
    pub selection: SelectionRule,
    pub fallback: WalkSatConfig,
    /// Decimation steps before handing over to local search.
    pub max_steps: Option<usize>,
    /// Consecutive negative-complexity steps that end the run.
    pub negative_steps: usize,
    pub seed: u64,
}

impl Default for SidConfig {
    fn default() -> Self {
        SidConfig {
            sp: SpConfig::default(),
            batch_fraction: f64::MIN_POSITIVE,
            bias_floor: 0.01,
            selection: SelectionRule::MinDelta,
            fallback: WalkSatConfig::default(),
            max_steps: None,
            negative_steps: 2,
            seed: 0,
        }
    }
}

impl SidConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "batch_fraction must lie in (0, 1], got {}",
                self.batch_fraction
            )));
        }
        if self.negative_steps == 0 {
            return Err(Error::InvalidConfig("negative_steps must be positive".into()));
        }
        self.sp.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub var: usize,
    pub value: bool,
    pub delta_hat: f64,
    /// Σ_R / N of the next SP solve, if there was one.
    pub complexity_density: Option<f64>,
    /// Unassigned variables after this row (after unit propagation for the
    /// last row of a step).
    pub n_residual: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidStatus {
    Solved,
    Contradiction,
    NegativeComplexity,
    NonConvergence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidOutcome {
    pub status: SidStatus,
    /// Present exactly when solved; verified against the input formula.
    pub assignment: Option<Vec<bool>>,
    /// Decimation steps (SP solves followed by a fix).
    pub steps: usize,
    pub fallback_used: bool,
    /// Variables fixed by decimation choices (not by propagation).
    pub decimated: usize,
    /// Unassigned variables and clauses when decimation stopped.
    pub residual_vars: usize,
    pub residual_clauses: usize,
    pub trace: Vec<TraceRow>,
}

/// Current reduced formula, fixed variables and trace of a decimation run.
#[derive(Clone, Debug)]
pub struct DecimationState {
    /// Reduced formula over the original variable indices.
    pub formula: Formula,
    /// Fixed variables, in original coordinates.
    pub fixed: Assignment,
    pub trace: Vec<TraceRow>,
    /// Original clause index of each clause of `formula`.
    pub origin: Vec<usize>,
    /// SP messages to warm-start the next solve, mapped onto `formula`.
    pub warm: Option<SpEdgeState>,
    pub step: usize,
    rng: Rng,
}

impl DecimationState {
    /// Simplifies `f` (propagating any unit clauses). `None` if that already
    /// yields a contradiction.
    pub fn new(f: &Formula, seed: u64) -> Result<Option<Self>> {
        let s = simplify(f, &Assignment::unset(f.n_vars()))?;
        if let SimplifyStatus::Contradiction { .. } = s.status {
            return Ok(None);
        }
        Ok(Some(DecimationState {
            formula: s.formula,
            fixed: s.assignment,
            trace: Vec::new(),
            origin: s.origin,
            warm: None,
            step: 0,
            rng: rng::rng_stream(seed, 0xdec),
        }))
    }

    pub fn n_residual(&self) -> usize {
        self.fixed.n_unset()
    }
}

/// Outcome of a single decimation step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepStatus {
    Reduced,
    Contradiction,
}

/// Fixes the next batch according to the SP solution `sp` of
/// `state.formula`, then simplifies.
pub fn sid_step(state: &mut DecimationState, sp: &SpResult, cfg: &SidConfig) -> Result<StepStatus> {
    cfg.validate()?;
    let f = &state.formula;
    let candidates: Vec<usize> = (0..f.n_vars())
        .filter(|&i| state.fixed.get(i).is_none() && f.degree(i) > 0)
        .collect();
    if candidates.is_empty() {
        return Ok(StepStatus::Reduced);
    }
    let biases: Vec<VariableBias> = sp.biases.iter().map(|&b| b.into()).collect();
    let lc = LocalComplexity::new(f, &sp.state);
    let mut scored: Vec<(usize, bool, f64)> = candidates
        .iter()
        .map(|&i| {
            let value = match biases[i].majority() {
                Some(v) => v,
                None => state.rng.random(),
            };
            let score = match cfg.selection {
                SelectionRule::MinDelta => delta_estimate(&lc, i, value),
                SelectionRule::MaxBias => f64::NAN,
            };
            (i, value, score)
        })
        .collect();
    let key = |&(i, _, d): &(usize, bool, f64)| (d, -biases[i].polarization().abs(), i);
    let cmp = |a: &(usize, bool, f64), b: &(usize, bool, f64)| {
        let (ka, kb) = (key(a), key(b));
        match cfg.selection {
            SelectionRule::MinDelta => ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2)),
            SelectionRule::MaxBias => ka.1.total_cmp(&kb.1).then(ka.2.cmp(&kb.2)),
        }
    };
    let batch = ((cfg.batch_fraction * candidates.len() as f64) as usize).clamp(1, candidates.len());
    if batch < scored.len() {
        scored.select_nth_unstable_by(batch - 1, cmp);
        scored.truncate(batch);
    }
    scored.sort_by(cmp);

    let mut assignment = Assignment::unset(f.n_vars());
    let mut remaining = state.n_residual();
    state.step += 1;
    for &(var, value, delta_hat) in &scored {
        assignment.set(var, value);
        state.fixed.set(var, value);
        remaining -= 1;
        state.trace.push(TraceRow {
            step: state.step,
            var,
            value,
            delta_hat,
            complexity_density: None,
            n_residual: remaining,
        });
    }
    let s = simplify(f, &assignment)?;
    if let SimplifyStatus::Contradiction { .. } = s.status {
        return Ok(StepStatus::Contradiction);
    }
    for &v in &s.propagated {
        state.fixed.set(v, s.assignment.get(v).expect("propagated variables are set"));
    }
    if let Some(last) = state.trace.last_mut() {
        last.n_residual = state.fixed.n_unset();
    }
    state.warm = Some(map_warnings(f, &s.formula, &s.origin, &sp.state));
    state.origin = s.origin.iter().map(|&c| state.origin[c]).collect();
    state.formula = s.formula;
    Ok(StepStatus::Reduced)
}

/// Carries warnings over to the reduced formula, matching edges by clause
/// origin and variable.
fn map_warnings(old: &Formula, new: &Formula, origin: &[usize], state: &SpEdgeState) -> SpEdgeState {
    let mut u = Vec::with_capacity(new.n_edges());
    for (c, &p) in origin.iter().enumerate().take(new.n_clauses()) {
        for e in new.clause_edges(c) {
            let lit = new.edge_literal(e);
            let w = old
                .clause_edges(p)
                .find(|&e2| old.edge_literal(e2).var == lit.var)
                .map(|e2| state.u[e2].polarized())
                .unwrap_or(0.0);
            u.push(Survey3::warning(w, lit.negated));
        }
    }
    SpEdgeState {
        s: vec![Survey3::IDENTITY; u.len()],
        u,
    }
}

/// Full decimation run. Errors only on invalid configuration; every
/// algorithmic failure is a status.
pub fn run_sid(f: &Formula, cfg: &SidConfig) -> Result<SidOutcome> {
    cfg.validate()?;
    let mut outcome = SidOutcome {
        status: SidStatus::Contradiction,
        assignment: None,
        steps: 0,
        fallback_used: false,
        decimated: 0,
        residual_vars: f.n_vars(),
        residual_clauses: f.n_clauses(),
        trace: Vec::new(),
    };
    let Some(mut state) = DecimationState::new(f, cfg.seed)? else {
        return Ok(outcome);
    };
    let mut negative_run = 0;
    let status = loop {
        if state.formula.n_clauses() == 0 || cfg.max_steps.is_some_and(|m| state.step >= m) {
            break None;
        }
        let sp_cfg = SpConfig {
            rng_seed: rng::mix(cfg.seed, state.step as u64),
            ..cfg.sp.clone()
        };
        let r = sp::sp_iterate(&state.formula, &sp_cfg, state.warm.as_ref())?;
        let step = state.step;
        for row in state.trace.iter_mut().rev().take_while(|row| row.step == step) {
            row.complexity_density = r.complexity_density;
        }
        if r.contradiction.is_some() {
            break Some(SidStatus::Contradiction);
        }
        if !r.converged {
            break Some(SidStatus::NonConvergence);
        }
        if r.trivial {
            break None;
        }
        let density = r.complexity_density.expect("converged without contradiction");
        if density < 0.0 {
            let check = sp::sp_iterate(
                &state.formula,
                &SpConfig {
                    max_iters: 1,
                    ..sp_cfg.clone()
                },
                Some(&r.state),
            )?;
            let err = check
                .complexity_density
                .map_or(f64::INFINITY, |d| (d - density).abs());
            if density < -3.0 * err {
                negative_run += 1;
                if negative_run >= cfg.negative_steps {
                    break Some(SidStatus::NegativeComplexity);
                }
            } else {
                negative_run = 0;
            }
        } else {
            negative_run = 0;
        }
        let max_bias = r
            .polarization
            .iter()
            .enumerate()
            .filter(|&(i, _)| state.fixed.get(i).is_none())
            .map(|(_, p)| p.abs())
            .fold(0.0, f64::max);
        if max_bias < cfg.bias_floor {
            break None;
        }
        if sid_step(&mut state, &r, cfg)? == StepStatus::Contradiction {
            break Some(SidStatus::Contradiction);
        }
    };
    outcome.steps = state.step;
    outcome.decimated = state.trace.len();
    outcome.residual_vars = state.fixed.n_unset();
    outcome.residual_clauses = state.formula.n_clauses();
    outcome.status = match status {
        Some(s) => s,
        None => {
            outcome.fallback_used = state.formula.n_clauses() > 0;
            let ws = walksat(&state.formula, &cfg.fallback, rng::mix(cfg.seed, u64::MAX));
            match ws.assignment {
                Some(values) => {
                    let full: Vec<bool> = (0..f.n_vars())
                        .map(|i| state.fixed.get(i).unwrap_or(values[i]))
                        .collect();
                    if f.count_violated(&full) == 0 {
                        outcome.assignment = Some(full);
                        SidStatus::Solved
                    } else {
                        SidStatus::NonConvergence
                    }
                }
                None => SidStatus::NonConvergence,
            }
        }
    };
    outcome.trace = state.trace;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random, Clause, Literal};
    use crate::sp::{sp_iterate, SpUMessage};

    fn state_with(u: Vec<SpUMessage>) -> SpEdgeState {
        SpEdgeState {
            s: vec![Survey3::IDENTITY; u.len()],
            u,
        }
    }

    #[test]
    fn bias_examples() {
        let f = Formula::new(
            4,
            vec![
                Clause::new(vec![Literal::pos(0), Literal::pos(1), Literal::pos(2)]),
                Clause::new(vec![Literal::neg(0), Literal::pos(1), Literal::pos(3)]),
            ],
        )
        .unwrap();
        let quiet = state_with(vec![Survey3::IDENTITY; 6]);
        let b = compute_biases(&f, &quiet).unwrap();
        assert!(b.iter().all(|x| *x == VariableBias::from(Survey3::IDENTITY)));
        assert_eq!(b[0].polarization(), 0.0);

        let mut u = vec![Survey3::IDENTITY; 6];
        u[0] = Survey3::TRUE;
        let b = compute_biases(&f, &state_with(u.clone())).unwrap();
        assert_eq!(b[0].w_t, 1.0);

        u[3] = Survey3::FALSE;
        assert_eq!(
            compute_biases(&f, &state_with(u)),
            Err(Error::Contradiction { var: 0 })
        );
    }

    #[test]
    fn delta_vanishes_for_a_satisfied_backbone_variable() {
        // variable 0 is frozen true and satisfies both of its clauses
        let f = Formula::new(
            5,
            vec![
                Clause::new(vec![Literal::pos(0), Literal::pos(1), Literal::pos(2)]),
                Clause::new(vec![Literal::pos(0), Literal::neg(3), Literal::pos(4)]),
                Clause::new(vec![Literal::pos(0), Literal::pos(3), Literal::neg(4)]),
            ],
        )
        .unwrap();
        let mut st = SpEdgeState::trivial(&f);
        for c in 0..3 {
            let e = f.clause_edges(c).start;
            st.s[e] = Survey3::TRUE;
            st.u[e] = Survey3::warning(0.7, false);
        }
        let lc = LocalComplexity::new(&f, &st);
        assert!(delta_estimate(&lc, 0, true).abs() < 1e-12);
    }

    #[test]
    fn delta_ranks_polarized_variables_first() {
        let f = generate_random(2000, 4.2, 2).unwrap();
        let r = sp_iterate(&f, &SpConfig { rng_seed: 2, ..SpConfig::default() }, None).unwrap();
        assert!(r.converged && !r.trivial);
        let lc = LocalComplexity::new(&f, &r.state);
        let mut rows: Vec<(f64, f64)> = (0..f.n_vars())
            .filter(|&i| f.degree(i) > 0)
            .map(|i| {
                let b = VariableBias::from(r.biases[i]);
                (delta_estimate(&lc, i, b.polarization() >= 0.0), b.polarization().abs())
            })
            .collect();
        // fixing against the favoured value costs more on average
        let against: f64 = (0..f.n_vars())
            .filter(|&i| f.degree(i) > 0)
            .map(|i| delta_estimate(&lc, i, r.biases[i].bias() < 0.0))
            .sum();
        let with: f64 = rows.iter().map(|r| r.0).sum();
        assert!(against > with, "against {against} with {with}");
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let k = rows.len() / 10;
        let head = rows[..k].iter().map(|r| r.1).sum::<f64>() / k as f64;
        let tail = rows[rows.len() - k..].iter().map(|r| r.1).sum::<f64>() / k as f64;
        assert!(head > tail, "head {head} tail {tail}");
    }

    #[test]
    fn solves_an_easy_instance_and_verifies() {
        let f = generate_random(3000, 3.9, 4).unwrap();
        let cfg = SidConfig {
            batch_fraction: 0.02,
            seed: 4,
            ..SidConfig::default()
        };
        let out = run_sid(&f, &cfg).unwrap();
        assert_eq!(out.status, SidStatus::Solved, "{:?}", (out.steps, out.residual_vars));
        assert_eq!(f.count_violated(out.assignment.as_ref().unwrap()), 0);
    }

    #[test]
    fn trace_counts_decrease_and_runs_repeat() {
        let f = generate_random(1500, 4.1, 8).unwrap();
        let cfg = SidConfig {
            batch_fraction: 0.01,
            seed: 8,
            ..SidConfig::default()
        };
        let a = run_sid(&f, &cfg).unwrap();
        let b = run_sid(&f, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.steps > 0);
        let mut prev = f.n_vars();
        for row in &a.trace {
            assert!(row.n_residual < prev);
            prev = row.n_residual;
        }
    }

    #[test]
    fn unsatisfiable_formula_is_never_solved() {
        // all eight sign patterns on three variables
        let clauses = (0..8u32)
            .map(|m| Clause::new((0..3).map(|v| Literal::new(v, m >> v & 1 == 1)).collect()))
            .collect();
        let f = Formula::new(3, clauses).unwrap();
        let out = run_sid(&f, &SidConfig::default()).unwrap();
        assert_ne!(out.status, SidStatus::Solved);
        assert!(out.assignment.is_none());
    }

    #[test]
    fn contradictory_units_end_immediately() {
        let f = Formula::new(
            2,
            vec![Clause::new(vec![Literal::pos(0)]), Clause::new(vec![Literal::neg(0)])],
        )
        .unwrap();
        let out = run_sid(&f, &SidConfig::default()).unwrap();
        assert_eq!(out.status, SidStatus::Contradiction);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn invalid_batch_fraction_is_rejected() {
        let f = generate_random(10, 2.0, 0).unwrap();
        for bf in [0.0, 1.5] {
            let cfg = SidConfig {
                batch_fraction: bf,
                ..SidConfig::default()
            };
            assert!(matches!(run_sid(&f, &cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
