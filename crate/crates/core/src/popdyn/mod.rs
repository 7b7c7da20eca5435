//! Population dynamics for the BP and SP distributional equations on the
//! random-tree ensemble of 3-SAT, and threshold estimation on top of it.
//!
//! A variable of the ensemble has `Poisson(3α)` incident clauses besides the
//! one it sends a cavity message to, each with an independent fair literal
//! sign. A population of messages stands for their distribution; one
//! update draws a local neighbourhood from the population, evaluates the
//! message equation on it, and overwrites a uniformly chosen slot.
//!
//! * BP mode stores cavity beliefs `p(i,c)` (variable → clause).
//! * SP mode stores warnings `u(i,c)` (clause → variable), always in the
//!   variable frame, so `u = {w, 1-w, 0}` or `{0, 1-w, w}`.

mod checkpoint;
mod reconstruction;
mod threshold;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use reconstruction::{reconstruction_signal, Reconstruction};
pub use threshold::{
    coupling_distance, find_alpha_b, find_alpha_c, find_alpha_d, find_alpha_u, frozen_onset_probe,
    CoupledSp, ThresholdConfig, ThresholdEstimate,
};

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::bp::Belief2;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::sp::{survey_from_pi, SpUMessage, Survey3, TRIVIAL_THRESHOLD};
use crate::stats;

/// Resampling budget for one update before giving up on a population whose
/// draws are all contradictory.
const MAX_RESAMPLE: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopMode {
    Bp,
    Sp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub alpha: f64,
    /// Clause width; only 3 is supported.
    pub k: usize,
}

impl EnsembleSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        let spec = EnsembleSpec { alpha, k: 3 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.k != 3 {
            return Err(Error::InvalidConfig(format!(
                "only 3-clauses are supported, got k = {}",
                self.k
            )));
        }
        Ok(())
    }

    /// Mean number of clauses on a variable, `k α`.
    pub fn mean_degree(&self) -> f64 {
        self.k as f64 * self.alpha
    }

    fn degree_law(&self) -> Poisson<f64> {
        Poisson::new(self.mean_degree()).expect("validated mean degree")
    }
}

/// Initial condition of a population.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopInit {
    /// BP: every belief `(1/2, 1/2)`. SP: every warning `{0, 1, 0}`.
    Trivial,
    /// BP: `p_T ~ U(0,1)`. SP: `w ~ U(0,1)` toward a random value.
    Polarized,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Samples {
    Bp(Vec<Belief2>),
    Sp(Vec<SpUMessage>),
}

#[derive(Clone, Debug)]
pub struct Population {
    samples: Samples,
    seed: u64,
    rng: Rng,
    updates: u64,
    contradictions: u64,
}

impl PartialEq for Population {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
            && self.seed == other.seed
            && self.updates == other.updates
            && self.contradictions == other.contradictions
    }
}

impl Population {
    pub fn new(mode: PopMode, size: usize, init: PopInit, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig("population size must be positive".into()));
        }
        let mut init_rng = rng::rng_stream(seed, 0);
        let samples = match (mode, init) {
            (PopMode::Bp, PopInit::Trivial) => Samples::Bp(vec![Belief2::UNIFORM; size]),
            (PopMode::Bp, PopInit::Polarized) => Samples::Bp(
                (0..size)
                    .map(|_| {
                        let p: f64 = init_rng.random();
                        Belief2::new(p, 1.0 - p)
                    })
                    .collect(),
            ),
            (PopMode::Sp, PopInit::Trivial) => Samples::Sp(vec![Survey3::IDENTITY; size]),
            (PopMode::Sp, PopInit::Polarized) => Samples::Sp(
                (0..size)
                    .map(|_| Survey3::warning(init_rng.random(), init_rng.random()))
                    .collect(),
            ),
        };
        Ok(Population {
            samples,
            seed,
            rng: rng::rng_stream(seed, 1),
            updates: 0,
            contradictions: 0,
        })
    }

    pub(crate) fn from_parts(samples: Samples, seed: u64, rng: Rng, updates: u64, contradictions: u64) -> Self {
        Population {
            samples,
            seed,
            rng,
            updates,
            contradictions,
        }
    }

    pub(crate) fn rng(&self) -> &Rng {
        &self.rng
    }

    pub fn mode(&self) -> PopMode {
        match self.samples {
            Samples::Bp(_) => PopMode::Bp,
            Samples::Sp(_) => PopMode::Sp,
        }
    }

    pub fn len(&self) -> usize {
        match &self.samples {
            Samples::Bp(v) => v.len(),
            Samples::Sp(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    /// Accepted updates so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Draws rejected because their neighbourhood was contradictory.
    pub fn contradictions(&self) -> u64 {
        self.contradictions
    }

    pub fn contradiction_rate(&self) -> f64 {
        let total = self.updates + self.contradictions;
        if total == 0 {
            0.0
        } else {
            self.contradictions as f64 / total as f64
        }
    }

    /// SP mode: mean warning strength `E[u_T + u_F]`. BP mode: mean
    /// `|p_T - 1/2|`.
    pub fn mean_polarization(&self) -> f64 {
        let n = self.len() as f64;
        match &self.samples {
            Samples::Bp(v) => v.iter().map(|b| (b.p_t - 0.5).abs()).sum::<f64>() / n,
            Samples::Sp(v) => v.iter().map(|u| u.polarized()).sum::<f64>() / n,
        }
    }
}

/// Literal sign and population indices of one cavity variable.
#[derive(Default)]
struct Neighbourhood {
    /// `(negated, start, end)` ranges into `idx`, one per cavity variable.
    vars: Vec<(bool, usize, usize)>,
    idx: Vec<usize>,
}

impl Neighbourhood {
    fn clear(&mut self) {
        self.vars.clear();
        self.idx.clear();
    }

    /// Appends a cavity variable with `degree` incoming messages drawn
    /// uniformly from a population of size `n`.
    fn push_var(&mut self, r: &mut Rng, degree: usize, n: usize) {
        let start = self.idx.len();
        for _ in 0..degree {
            self.idx.push(r.random_range(0..n));
        }
        self.vars.push((r.random(), start, self.idx.len()));
    }

    fn var_inputs(&self, k: usize) -> (bool, &[usize]) {
        let (neg, s, e) = self.vars[k];
        (neg, &self.idx[s..e])
    }
}

/// Cavity survey of a variable from the warnings it receives.
#[inline]
fn sp_cavity(pop: &[SpUMessage], incoming: &[usize]) -> Option<Survey3> {
    let (mut pi_t, mut pi_f) = (1.0, 1.0);
    for &j in incoming {
        pi_t *= 1.0 - pop[j].s_t;
        pi_f *= 1.0 - pop[j].s_f;
    }
    survey_from_pi(pi_t, pi_f)
}

/// `Π_k s_viol(k)` over the cavity variables of a neighbourhood.
#[inline]
fn sp_violation_product(pop: &[SpUMessage], nb: &Neighbourhood) -> Option<f64> {
    let mut x = 1.0;
    for k in 0..nb.vars.len() {
        let (neg, inc) = nb.var_inputs(k);
        x *= sp_cavity(pop, inc)?.violation(neg);
    }
    Some(x)
}

/// New warning for a clause whose receiving literal has sign `receiver`.
#[inline]
fn sp_evaluate(pop: &[SpUMessage], receiver: bool, nb: &Neighbourhood) -> Option<SpUMessage> {
    Some(Survey3::warning(sp_violation_product(pop, nb)?, receiver))
}

/// Draws a 3-clause neighbourhood: the two other variables, each with a
/// Poisson cavity degree.
fn draw_clause(r: &mut Rng, law: &Poisson<f64>, n: usize, nb: &mut Neighbourhood, others: usize) {
    nb.clear();
    for _ in 0..others {
        let d = law.sample(r) as usize;
        nb.push_var(r, d, n);
    }
}

/// One BP clause message in the variable frame, unnormalized:
/// 1 on the satisfying side, `1 - x` on the violating side.
#[inline]
fn bp_clause_message(x: f64, receiver_negated: bool) -> Belief2 {
    if receiver_negated {
        Belief2::new(1.0 - x, 1.0)
    } else {
        Belief2::new(1.0, 1.0 - x)
    }
}

/// BP variable update: `degree` clauses, each with two cavity beliefs drawn
/// from the population. Returns the unnormalized product.
fn bp_draw_product(pop: &[Belief2], r: &mut Rng, degree: usize) -> Belief2 {
    let n = pop.len();
    let mut acc = Belief2::new(1.0, 1.0);
    for _ in 0..degree {
        let receiver: bool = r.random();
        let mut x = 1.0;
        for _ in 0..2 {
            let p = pop[r.random_range(0..n)];
            x *= p.violation(r.random());
        }
        acc = acc.product(bp_clause_message(x, receiver));
    }
    acc
}

/// Performs `pop.len()` accepted replacements.
pub fn popdyn_sweep(pop: &mut Population, spec: &EnsembleSpec) -> Result<()> {
    spec.validate()?;
    let law = spec.degree_law();
    let n = pop.len();
    let mut nb = Neighbourhood::default();
    for _ in 0..n {
        let mut tries = 0;
        loop {
            let slot = pop.rng.random_range(0..n);
            let fresh = match &pop.samples {
                Samples::Sp(v) => {
                    let receiver: bool = pop.rng.random();
                    draw_clause(&mut pop.rng, &law, n, &mut nb, spec.k - 1);
                    sp_evaluate(v, receiver, &nb).map(Fresh::Sp)
                }
                Samples::Bp(v) => {
                    let d = law.sample(&mut pop.rng) as usize;
                    bp_draw_product(v, &mut pop.rng, d)
                        .normalized()
                        .ok()
                        .map(Fresh::Bp)
                }
            };
            match fresh {
                Some(f) => {
                    match (&mut pop.samples, f) {
                        (Samples::Sp(v), Fresh::Sp(u)) => v[slot] = u,
                        (Samples::Bp(v), Fresh::Bp(p)) => v[slot] = p,
                        _ => unreachable!("mode mismatch"),
                    }
                    pop.updates += 1;
                    break;
                }
                None => {
                    pop.contradictions += 1;
                    tries += 1;
                    if tries >= MAX_RESAMPLE {
                        return Err(Error::ZeroNorm);
                    }
                }
            }
        }
    }
    Ok(())
}

enum Fresh {
    Bp(Belief2),
    Sp(SpUMessage),
}

/// Local averages over freshly drawn neighbourhoods.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalMoments {
    /// `E[ln Z1]` over variables with `Poisson(3α)` clauses.
    pub ln_z1: f64,
    /// `E[ln Z2]` over clauses with three cavity variables.
    pub ln_z2: f64,
    /// SP: `E[W_T + W_F]` of the full variable bias. BP: fraction of full
    /// beliefs within [`TRIVIAL_THRESHOLD`] of 0 or 1.
    pub frozen: f64,
    /// Draws with `Z = 0`, excluded from the averages.
    pub rejected: u64,
}

impl LocalMoments {
    /// Density `E[ln Z1] - (k-1) α E[ln Z2]` (entropy in BP mode, reduced
    /// complexity in SP mode).
    pub fn density(&self, spec: &EnsembleSpec) -> f64 {
        self.ln_z1 - (spec.k as f64 - 1.0) * spec.alpha * self.ln_z2
    }
}

/// Poisson weights `P(d)` for `d = 0..` until the remaining tail is
/// below `1e-12`.
fn poisson_weights(mean: f64) -> Vec<f64> {
    let mut w = vec![(-mean).exp()];
    let mut cum = w[0];
    let mut d = 0usize;
    while 1.0 - cum > 1e-12 && w[d] > 0.0 || (d as f64) < mean {
        let next = w[d] * mean / (d + 1) as f64;
        w.push(next);
        cum += next;
        d += 1;
    }
    w
}

/// `E_signs[ln(1 - Π_j v_j)]` with `v_j` either component of `viol[j]`,
/// averaged over all sign patterns; `None` if some pattern has `x = 1`.
fn sign_averaged_ln_z2(viol: &[(f64, f64)]) -> Option<f64> {
    let k = viol.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << k) {
        let x: f64 = viol
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| if mask >> j & 1 == 1 { a } else { b })
            .product();
        if !(x < 1.0) {
            return None;
        }
        total += (1.0 - x).ln();
    }
    Some(total / (1u32 << k) as f64)
}

/// Averages the node and clause terms over about `samples` draws of each
/// kind. Node terms are stratified over the exact Poisson degree law and
/// clause terms are averaged exactly over the literal signs. Consumes
/// randomness from the population's generator.
pub fn measure(pop: &mut Population, spec: &EnsembleSpec, samples: usize) -> Result<LocalMoments> {
    spec.validate()?;
    let law = spec.degree_law();
    let n = pop.len();
    let weights = poisson_weights(spec.mean_degree());
    let mut nb = Neighbourhood::default();
    let mut viol = Vec::with_capacity(spec.k);
    let mut rejected = 0u64;
    let r = &mut pop.rng;

    // node terms
    let (mut z1, mut frozen, mut wsum) = (0.0, 0.0, 0.0);
    for (d, &p) in weights.iter().enumerate() {
        let count = ((samples as f64 * p).round() as usize).max(1);
        let (mut acc, mut acc_frozen, mut got, mut tries) = (0.0, 0.0, 0usize, 0usize);
        while got < count {
            tries += 1;
            if tries > count.saturating_mul(MAX_RESAMPLE) {
                return Err(Error::ZeroNorm);
            }
            let (z, is_frozen) = match &pop.samples {
                Samples::Sp(v) => {
                    let (mut pi_t, mut pi_f) = (1.0, 1.0);
                    for _ in 0..d {
                        let u = v[r.random_range(0..n)];
                        pi_t *= 1.0 - u.s_t;
                        pi_f *= 1.0 - u.s_f;
                    }
                    let z: f64 = pi_t + pi_f - pi_t * pi_f;
                    (z, if z > 0.0 { 1.0 - pi_t * pi_f / z } else { 0.0 })
                }
                Samples::Bp(v) => {
                    let prod = bp_draw_product(v, r, d);
                    let z = prod.norm();
                    let p = prod.p_t / z;
                    (z, if z > 0.0 && p.min(1.0 - p) <= TRIVIAL_THRESHOLD { 1.0 } else { 0.0 })
                }
            };
            if z > 0.0 {
                acc += z.ln();
                acc_frozen += is_frozen;
                got += 1;
            } else {
                rejected += 1;
            }
        }
        z1 += p * acc / count as f64;
        frozen += p * acc_frozen / count as f64;
        wsum += p;
    }

    // clause terms
    let (mut z2, mut got, mut tries) = (0.0, 0usize, 0usize);
    while got < samples.max(1) {
        tries += 1;
        if tries > samples.max(1).saturating_mul(MAX_RESAMPLE) {
            return Err(Error::ZeroNorm);
        }
        viol.clear();
        let mut ok = true;
        match &pop.samples {
            Samples::Sp(v) => {
                draw_clause(r, &law, n, &mut nb, spec.k);
                for k in 0..spec.k {
                    match sp_cavity(v, nb.var_inputs(k).1) {
                        Some(s) => viol.push((s.s_t, s.s_f)),
                        None => ok = false,
                    }
                }
            }
            Samples::Bp(v) => {
                for _ in 0..spec.k {
                    let b = v[r.random_range(0..n)];
                    viol.push((b.p_t, b.p_f));
                }
            }
        }
        match sign_averaged_ln_z2(&viol) {
            Some(l) if ok => {
                z2 += l;
                got += 1;
            }
            _ => rejected += 1,
        }
    }
    Ok(LocalMoments {
        ln_z1: z1 / wsum,
        ln_z2: z2 / got as f64,
        frozen: frozen / wsum,
        rejected,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopDynConfig {
    pub mode: PopMode,
    pub pop_size: usize,
    /// Sweeps discarded before measuring.
    pub burn_in: usize,
    /// Sweeps with a measurement after each.
    pub measure_sweeps: usize,
    /// Blocks for the batch-means error.
    pub batches: usize,
    pub init: PopInit,
    pub seed: u64,
}

impl Default for PopDynConfig {
    fn default() -> Self {
        PopDynConfig {
            mode: PopMode::Sp,
            pop_size: 10_000,
            burn_in: 100,
            measure_sweeps: 100,
            batches: 10,
            init: PopInit::Polarized,
            seed: 0,
        }
    }
}

impl PopDynConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size == 0 || self.measure_sweeps == 0 || self.batches == 0 {
            return Err(Error::InvalidConfig(
                "pop_size, measure_sweeps and batches must be positive".into(),
            ));
        }
        if self.batches > self.measure_sweeps {
            return Err(Error::InvalidConfig(format!(
                "{} batches need at least as many measurement sweeps, got {}",
                self.batches, self.measure_sweeps
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopDynResult {
    pub alpha: f64,
    pub mode: PopMode,
    /// SP: reduced complexity density. BP: entropy density.
    pub complexity_density: f64,
    /// Batch-means standard error of `complexity_density`.
    pub err: f64,
    pub frozen_fraction: f64,
    /// The first and second halves of the measurement agree within three
    /// combined standard errors.
    pub converged: bool,
    pub sweeps_used: usize,
    pub contradiction_rate: f64,
}

/// Equilibrates a population and averages the density over the measurement
/// sweeps.
pub fn estimate_complexity_density(spec: &EnsembleSpec, cfg: &PopDynConfig) -> Result<PopDynResult> {
    let (result, _) = estimate_with_population(spec, cfg)?;
    Ok(result)
}

/// [`estimate_complexity_density`], also returning the final population.
pub fn estimate_with_population(spec: &EnsembleSpec, cfg: &PopDynConfig) -> Result<(PopDynResult, Population)> {
    spec.validate()?;
    cfg.validate()?;
    let mut pop = Population::new(cfg.mode, cfg.pop_size, cfg.init, cfg.seed)?;
    for _ in 0..cfg.burn_in {
        popdyn_sweep(&mut pop, spec)?;
    }
    let mut density = Vec::with_capacity(cfg.measure_sweeps);
    let mut frozen = Vec::with_capacity(cfg.measure_sweeps);
    for _ in 0..cfg.measure_sweeps {
        popdyn_sweep(&mut pop, spec)?;
        let m = measure(&mut pop, spec, cfg.pop_size)?;
        density.push(m.density(spec));
        frozen.push(m.frozen);
    }
    let (mean, err) = stats::batch_means(&density, cfg.batches);
    let half = density.len() / 2;
    let converged = if half == 0 {
        true
    } else {
        let (a, ea) = stats::batch_means(&density[..half], (cfg.batches / 2).max(1));
        let (b, eb) = stats::batch_means(&density[half..], (cfg.batches / 2).max(1));
        (a - b).abs() <= 3.0 * (ea * ea + eb * eb).sqrt() + 1e-12
    };
    let frozen_fraction = frozen.iter().sum::<f64>() / frozen.len() as f64;
    let result = PopDynResult {
        alpha: spec.alpha,
        mode: cfg.mode,
        complexity_density: mean,
        err,
        frozen_fraction,
        converged,
        sweeps_used: cfg.burn_in + cfg.measure_sweeps,
        contradiction_rate: pop.contradiction_rate(),
    };
    Ok((result, pop))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp_samples(p: &Population) -> &[SpUMessage] {
        match p.samples() {
            Samples::Sp(v) => v,
            _ => panic!("not an SP population"),
        }
    }

    #[test]
    fn trivial_sp_population_is_stationary() {
        let spec = EnsembleSpec::new(4.2).unwrap();
        let mut pop = Population::new(PopMode::Sp, 2000, PopInit::Trivial, 3).unwrap();
        for _ in 0..5 {
            popdyn_sweep(&mut pop, &spec).unwrap();
        }
        assert!(sp_samples(&pop).iter().all(|&u| u == Survey3::IDENTITY));
        let m = measure(&mut pop, &spec, 1000).unwrap();
        assert_eq!((m.ln_z1, m.ln_z2, m.frozen), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sp_samples_keep_invariants() {
        let spec = EnsembleSpec::new(4.2).unwrap();
        let mut pop = Population::new(PopMode::Sp, 3000, PopInit::Polarized, 1).unwrap();
        for _ in 0..20 {
            popdyn_sweep(&mut pop, &spec).unwrap();
            for u in sp_samples(&pop) {
                assert_eq!(u.s_t * u.s_f, 0.0);
                assert!((u.norm() - 1.0).abs() < 1e-12);
                assert!(u.s_t >= 0.0 && u.s_i >= 0.0 && u.s_f >= 0.0);
            }
        }
        assert!(pop.mean_polarization() > 0.05);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let spec = EnsembleSpec::new(4.0).unwrap();
        for mode in [PopMode::Bp, PopMode::Sp] {
            let run = || {
                let mut p = Population::new(mode, 500, PopInit::Polarized, 9).unwrap();
                for _ in 0..3 {
                    popdyn_sweep(&mut p, &spec).unwrap();
                }
                p
            };
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn bp_population_stays_symmetric() {
        // small alpha: beliefs stay near (1/2, 1/2) and T/F symmetric
        let spec = EnsembleSpec::new(0.05).unwrap();
        let mut pop = Population::new(PopMode::Bp, 20_000, PopInit::Trivial, 2).unwrap();
        for _ in 0..10 {
            popdyn_sweep(&mut pop, &spec).unwrap();
        }
        let Samples::Bp(v) = pop.samples() else { panic!() };
        let mean = v.iter().map(|b| b.p_t).sum::<f64>() / v.len() as f64;
        assert!((mean - 0.5).abs() < 2e-3, "mean {mean}");
        // most variables have no other clause and keep the exact symmetric point
        let exact = v.iter().filter(|&&b| b == Belief2::UNIFORM).count();
        assert!(exact as f64 > 0.8 * v.len() as f64);
        assert!(v.iter().all(|b| (b.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bp_population_without_clauses_is_exactly_uniform() {
        let spec = EnsembleSpec::new(1e-12).unwrap();
        let mut pop = Population::new(PopMode::Bp, 1000, PopInit::Trivial, 0).unwrap();
        popdyn_sweep(&mut pop, &spec).unwrap();
        let Samples::Bp(v) = pop.samples() else { panic!() };
        assert!(v.iter().all(|&b| b == Belief2::UNIFORM));
        let m = measure(&mut pop, &spec, 1000).unwrap();
        // entropy density ln 2 - 2 alpha ln(7/8) with alpha ~ 0
        assert!((m.density(&spec) - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn complexity_sign_on_both_sides_of_the_transition() {
        let cfg = PopDynConfig {
            pop_size: 10_000,
            burn_in: 40,
            measure_sweeps: 20,
            batches: 5,
            ..PopDynConfig::default()
        };
        let low = estimate_complexity_density(&EnsembleSpec::new(4.0).unwrap(), &cfg).unwrap();
        let high = estimate_complexity_density(&EnsembleSpec::new(4.5).unwrap(), &cfg).unwrap();
        assert!(low.complexity_density > 3.0 * low.err, "{low:?}");
        assert!(high.complexity_density < -3.0 * high.err, "{high:?}");
        assert!(low.frozen_fraction > 0.1);
        let trivial = estimate_complexity_density(&EnsembleSpec::new(3.5).unwrap(), &cfg).unwrap();
        assert_eq!(trivial.frozen_fraction, 0.0);
        assert_eq!(trivial.complexity_density, 0.0);
    }
}
