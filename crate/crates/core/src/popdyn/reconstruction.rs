//! Tree reconstruction for the BP measure.
//!
//! Each element describes a random tree hanging below a cavity variable:
//! `nu` is its free-boundary BP belief, and `eta_t` / `eta_f` are the
//! beliefs reconstructed from the leaves after broadcasting the root value
//! *true* / *false* down the tree through the clause constraints. Leaves
//! start out revealing the root exactly. The reconstructed beliefs forget
//! the root (collapse onto `nu`) below the reconstruction threshold and
//! keep a finite memory above it.

use rand::Rng as _;
use rand_distr::Distribution;

use super::{popdyn_sweep, EnsembleSpec, PopDynConfig, PopInit, PopMode, Population, Samples, MAX_RESAMPLE};
use crate::bp::Belief2;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::stats;

#[derive(Clone, Debug)]
pub struct Reconstruction {
    nu: Vec<f64>,
    eta_t: Vec<f64>,
    eta_f: Vec<f64>,
    rng: Rng,
}

/// Probability that a literal with the given sign is violated under a
/// belief `p = P[true]`.
#[inline]
fn violation(p: f64, negated: bool) -> f64 {
    if negated {
        p
    } else {
        1.0 - p
    }
}

#[inline]
fn clause_factor(acc: &mut Belief2, x: f64, receiver_negated: bool) {
    if receiver_negated {
        acc.p_t *= 1.0 - x;
    } else {
        acc.p_f *= 1.0 - x;
    }
}

impl Reconstruction {
    /// Starts from the beliefs of an equilibrated BP population with fully
    /// revealing leaves.
    pub fn new(bp: &Population, seed: u64) -> Result<Self> {
        let Samples::Bp(v) = bp.samples() else {
            return Err(Error::InvalidConfig("reconstruction needs a BP population".into()));
        };
        let nu: Vec<f64> = v.iter().map(|b| b.p_t).collect();
        Ok(Reconstruction {
            eta_t: vec![1.0; nu.len()],
            eta_f: vec![0.0; nu.len()],
            nu,
            rng: rng::rng_stream(seed, 20),
        })
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// One generation: every element is replaced by a fresh tree one level
    /// deeper (elements are rebuilt from the previous generation, not in
    /// place).
    pub fn sweep(&mut self, spec: &EnsembleSpec) -> Result<()> {
        spec.validate()?;
        let law = spec.degree_law();
        let n = self.len();
        let mut next = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let mut tries = 0;
            let (nu, et, ef) = loop {
                if let Some(v) = self.update(&law) {
                    break v;
                }
                tries += 1;
                if tries >= MAX_RESAMPLE {
                    return Err(Error::ZeroNorm);
                }
            };
            next.0.push(nu);
            next.1.push(et);
            next.2.push(ef);
        }
        (self.nu, self.eta_t, self.eta_f) = next;
        Ok(())
    }

    fn update(&mut self, law: &rand_distr::Poisson<f64>) -> Option<(f64, f64, f64)> {
        let n = self.len();
        let r = &mut self.rng;
        let degree = law.sample(r) as usize;
        let mut free = Belief2::new(1.0, 1.0);
        let mut given = [Belief2::new(1.0, 1.0), Belief2::new(1.0, 1.0)];
        for _ in 0..degree {
            let s0: bool = r.random();
            let kids = [
                (r.random_range(0..n), r.random::<bool>()),
                (r.random_range(0..n), r.random::<bool>()),
            ];
            let v = kids.map(|(j, s)| violation(self.nu[j], s));
            clause_factor(&mut free, v[0] * v[1], s0);
            for (slot, root) in [true, false].into_iter().enumerate() {
                // which children are violated in the broadcast configuration
                let violated = if root != s0 {
                    [r.random::<f64>() < v[0], r.random::<f64>() < v[1]]
                } else {
                    let w = [v[0] * (1.0 - v[1]), (1.0 - v[0]) * v[1], (1.0 - v[0]) * (1.0 - v[1])];
                    let total = w[0] + w[1] + w[2];
                    if !(total > 0.0) {
                        return None;
                    }
                    let x = r.random::<f64>() * total;
                    if x < w[0] {
                        [true, false]
                    } else if x < w[0] + w[1] {
                        [false, true]
                    } else {
                        [false, false]
                    }
                };
                let mut x = 1.0;
                for (k, &(j, s)) in kids.iter().enumerate() {
                    // a literal is violated exactly when its variable equals its sign
                    let value = if violated[k] { s } else { !s };
                    let eta = if value { self.eta_t[j] } else { self.eta_f[j] };
                    x *= violation(eta, s);
                }
                clause_factor(&mut given[slot], x, s0);
            }
        }
        let nu = free.normalized().ok()?.p_t;
        let et = given[0].normalized().ok()?.p_t;
        let ef = given[1].normalized().ok()?.p_t;
        Some((nu, et, ef))
    }

    /// `E[nu |eta_t - nu| + (1 - nu) |eta_f - nu|]`: zero when the leaves
    /// carry no information on the root.
    pub fn signal(&self) -> f64 {
        let n = self.len() as f64;
        self.nu
            .iter()
            .zip(self.eta_t.iter().zip(&self.eta_f))
            .map(|(&nu, (&t, &f))| nu * (t - nu).abs() + (1.0 - nu) * (f - nu).abs())
            .sum::<f64>()
            / n
    }
}

/// Equilibrates a BP population for `burn_in` sweeps, runs
/// `measure_sweeps` reconstruction generations and returns the signal
/// averaged over the last `measure_sweeps / batches` generations.
pub fn reconstruction_signal(spec: &EnsembleSpec, cfg: &PopDynConfig) -> Result<f64> {
    cfg.validate()?;
    let mut bp = Population::new(PopMode::Bp, cfg.pop_size, PopInit::Trivial, cfg.seed)?;
    for _ in 0..cfg.burn_in {
        popdyn_sweep(&mut bp, spec)?;
    }
    let mut rec = Reconstruction::new(&bp, cfg.seed)?;
    let mut signal = Vec::with_capacity(cfg.measure_sweeps);
    for _ in 0..cfg.measure_sweeps {
        rec.sweep(spec)?;
        signal.push(rec.signal());
    }
    let tail = (cfg.measure_sweeps / cfg.batches).max(1);
    Ok(stats::mean_sem(&signal[signal.len() - tail..]).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PopDynConfig {
        PopDynConfig {
            pop_size: 5000,
            burn_in: 30,
            measure_sweeps: 60,
            batches: 6,
            ..PopDynConfig::default()
        }
    }

    #[test]
    fn leaves_are_forgotten_at_low_density() {
        let s = reconstruction_signal(&EnsembleSpec::new(2.0).unwrap(), &cfg()).unwrap();
        assert!(s < 1e-6, "signal {s}");
    }

    #[test]
    fn leaves_are_remembered_at_high_density() {
        let s = reconstruction_signal(&EnsembleSpec::new(4.2).unwrap(), &cfg()).unwrap();
        assert!(s > 0.05, "signal {s}");
    }
}
