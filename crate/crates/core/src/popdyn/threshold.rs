//! Threshold location by bisection on population observables.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    draw_clause, estimate_complexity_density, measure, popdyn_sweep, reconstruction_signal, sp_evaluate,
    EnsembleSpec, Neighbourhood, PopDynConfig, PopInit, PopMode, Population, MAX_RESAMPLE,
};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::sp::{SpUMessage, Survey3, TRIVIAL_THRESHOLD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub popdyn: PopDynConfig,
    pub lo: f64,
    pub hi: f64,
    /// Bisection stops once the bracket is this narrow.
    pub width: f64,
    /// Onset finders: the observable must exceed this to count as nonzero.
    pub floor: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            popdyn: PopDynConfig::default(),
            lo: 4.1,
            hi: 4.4,
            width: 0.005,
            floor: TRIVIAL_THRESHOLD,
        }
    }
}

impl ThresholdConfig {
    /// Settings for [`find_alpha_c`]: a `10^5` population bisected on
    /// `[4.1, 4.4]`.
    pub fn alpha_c() -> Self {
        ThresholdConfig {
            popdyn: PopDynConfig {
                pop_size: 100_000,
                ..PopDynConfig::default()
            },
            ..ThresholdConfig::default()
        }
    }

    /// Settings for [`find_alpha_b`]. The frozen fraction jumps from zero to
    /// about 0.6, so any floor well inside that gap works.
    pub fn alpha_b() -> Self {
        ThresholdConfig {
            popdyn: PopDynConfig {
                pop_size: 20_000,
                burn_in: 200,
                ..PopDynConfig::default()
            },
            lo: 3.7,
            hi: 4.1,
            width: 0.005,
            floor: 0.01,
        }
    }

    /// Settings for [`find_alpha_d`]. Near the onset the signal decays
    /// slowly, hence the long run of generations.
    pub fn alpha_d() -> Self {
        ThresholdConfig {
            popdyn: PopDynConfig {
                mode: PopMode::Bp,
                pop_size: 20_000,
                burn_in: 50,
                measure_sweeps: 1000,
                batches: 10,
                init: PopInit::Trivial,
                ..PopDynConfig::default()
            },
            lo: 3.6,
            hi: 4.1,
            width: 0.01,
            floor: 1e-3,
        }
    }

    /// Settings for [`find_alpha_u`]. Below the onset the two populations
    /// merge to rounding level within the burn-in.
    pub fn alpha_u() -> Self {
        ThresholdConfig {
            popdyn: PopDynConfig {
                pop_size: 20_000,
                burn_in: 1000,
                measure_sweeps: 100,
                ..PopDynConfig::default()
            },
            lo: 4.2,
            hi: 4.5,
            width: 0.01,
            floor: 1e-4,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi) {
            return Err(Error::InvalidConfig(format!(
                "invalid bracket [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.width > 0.0) {
            return Err(Error::InvalidConfig("width must be positive".into()));
        }
        self.popdyn.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub alpha: f64,
    /// Final bracket.
    pub lo: f64,
    pub hi: f64,
    /// Half-width of the reported interval: the larger of the bracket
    /// half-width and the statistical error propagated to alpha.
    pub half_width: f64,
    /// Bisection stopped because the statistical error covered the bracket.
    pub err_limited: bool,
    /// Every probe as `(alpha, observable, err)`.
    pub evaluations: Vec<(f64, f64, f64)>,
}

/// Zero crossing of the SP complexity density, decreasing in alpha.
pub fn find_alpha_c(cfg: &ThresholdConfig) -> Result<ThresholdEstimate> {
    cfg.validate()?;
    let pd = PopDynConfig {
        mode: PopMode::Sp,
        init: PopInit::Polarized,
        ..cfg.popdyn.clone()
    };
    let mut evaluations = Vec::new();
    let mut eval = |alpha: f64| -> Result<(f64, f64)> {
        let r = estimate_complexity_density(&EnsembleSpec::new(alpha)?, &pd)?;
        evaluations.push((alpha, r.complexity_density, r.err));
        Ok((r.complexity_density, r.err))
    };
    let (mut lo, mut hi) = (cfg.lo, cfg.hi);
    let (mut v_lo, mut e_lo) = eval(lo)?;
    let (mut v_hi, mut e_hi) = eval(hi)?;
    if !(v_lo > 0.0 && v_hi < 0.0) {
        return Err(Error::Bracketing { lo, hi });
    }
    let slope = (v_hi - v_lo) / (hi - lo);
    let mut err_limited = false;
    while hi - lo > cfg.width {
        if e_lo.max(e_hi) / slope.abs() >= 0.5 * (hi - lo) {
            err_limited = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (v, e) = eval(mid)?;
        if v > 0.0 {
            (lo, v_lo, e_lo) = (mid, v, e);
        } else {
            (hi, v_hi, e_hi) = (mid, v, e);
        }
    }
    let alpha = lo + v_lo * (hi - lo) / (v_lo - v_hi);
    let stat = e_lo.max(e_hi) / slope.abs();
    Ok(ThresholdEstimate {
        alpha,
        lo,
        hi,
        half_width: stat.max(0.5 * (hi - lo)),
        err_limited,
        evaluations,
    })
}

/// Bisects for the smallest alpha where `observable(alpha) > floor`.
fn find_onset(cfg: &ThresholdConfig, mut observable: impl FnMut(f64) -> Result<f64>) -> Result<ThresholdEstimate> {
    cfg.validate()?;
    let mut evaluations = Vec::new();
    let mut above = |alpha: f64| -> Result<bool> {
        let v = observable(alpha)?;
        evaluations.push((alpha, v, 0.0));
        Ok(v > cfg.floor)
    };
    let (mut lo, mut hi) = (cfg.lo, cfg.hi);
    if above(lo)? || !above(hi)? {
        return Err(Error::Bracketing { lo, hi });
    }
    while hi - lo > cfg.width {
        let mid = 0.5 * (lo + hi);
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdEstimate {
        alpha: 0.5 * (lo + hi),
        lo,
        hi,
        half_width: 0.5 * (hi - lo),
        err_limited: false,
        evaluations,
    })
}

/// Frozen fraction `E[W_T + W_F]` of an SP population started polarized,
/// averaged over the measurement sweeps after burn-in.
pub fn frozen_onset_probe(alpha: f64, cfg: &PopDynConfig) -> Result<f64> {
    let spec = EnsembleSpec::new(alpha)?;
    let mut pop = Population::new(PopMode::Sp, cfg.pop_size, PopInit::Polarized, cfg.seed)?;
    for _ in 0..cfg.burn_in {
        popdyn_sweep(&mut pop, &spec)?;
    }
    let mut total = 0.0;
    for _ in 0..cfg.measure_sweeps {
        popdyn_sweep(&mut pop, &spec)?;
        total += measure(&mut pop, &spec, cfg.pop_size)?.frozen;
    }
    Ok(total / cfg.measure_sweeps as f64)
}

/// Onset of frozen variables: the SP population keeps a nonzero polarized
/// mass.
pub fn find_alpha_b(cfg: &ThresholdConfig) -> Result<ThresholdEstimate> {
    find_onset(cfg, |alpha| frozen_onset_probe(alpha, &cfg.popdyn))
}

/// Onset of tree reconstruction for the BP (Gibbs) measure.
pub fn find_alpha_d(cfg: &ThresholdConfig) -> Result<ThresholdEstimate> {
    find_onset(cfg, |alpha| reconstruction_signal(&EnsembleSpec::new(alpha)?, &cfg.popdyn))
}

/// Onset where two SP populations driven by identical draws from different
/// starting points stop merging.
pub fn find_alpha_u(cfg: &ThresholdConfig) -> Result<ThresholdEstimate> {
    find_onset(cfg, |alpha| coupling_distance(&EnsembleSpec::new(alpha)?, &cfg.popdyn))
}

/// Two SP populations updated with the same slots, degrees, signs and
/// sample indices.
#[derive(Clone, Debug)]
pub struct CoupledSp {
    a: Vec<SpUMessage>,
    b: Vec<SpUMessage>,
    rng: Rng,
    contradictions: u64,
}

impl CoupledSp {
    /// Both populations start polarized, from independent random values.
    pub fn new(size: usize, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig("population size must be positive".into()));
        }
        let init = |stream| {
            let mut r = rng::rng_stream(seed, stream);
            (0..size)
                .map(|_| Survey3::warning(r.random(), r.random()))
                .collect::<Vec<_>>()
        };
        Ok(CoupledSp {
            a: init(10),
            b: init(11),
            rng: rng::rng_stream(seed, 12),
            contradictions: 0,
        })
    }

    pub fn sweep(&mut self, spec: &EnsembleSpec) -> Result<()> {
        spec.validate()?;
        let law = spec.degree_law();
        let n = self.a.len();
        let mut nb = Neighbourhood::default();
        for _ in 0..n {
            let mut tries = 0;
            loop {
                let slot = self.rng.random_range(0..n);
                let receiver: bool = self.rng.random();
                draw_clause(&mut self.rng, &law, n, &mut nb, spec.k - 1);
                match (sp_evaluate(&self.a, receiver, &nb), sp_evaluate(&self.b, receiver, &nb)) {
                    (Some(ua), Some(ub)) => {
                        self.a[slot] = ua;
                        self.b[slot] = ub;
                        break;
                    }
                    _ => {
                        self.contradictions += 1;
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

    /// Mean L1 distance between paired warnings.
    pub fn distance(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(x, y)| (x.s_t - y.s_t).abs() + (x.s_f - y.s_f).abs())
            .sum::<f64>()
            / self.a.len() as f64
    }

    /// Mean warning strength of each population.
    pub fn mean_warnings(&self) -> (f64, f64) {
        let m = |v: &[SpUMessage]| v.iter().map(|u| u.polarized()).sum::<f64>() / v.len() as f64;
        (m(&self.a), m(&self.b))
    }

    pub fn contradictions(&self) -> u64 {
        self.contradictions
    }
}

/// Coupling distance averaged over the measurement sweeps after burn-in.
pub fn coupling_distance(spec: &EnsembleSpec, cfg: &PopDynConfig) -> Result<f64> {
    let mut c = CoupledSp::new(cfg.pop_size, cfg.seed)?;
    for _ in 0..cfg.burn_in {
        c.sweep(spec)?;
    }
    let mut total = 0.0;
    for _ in 0..cfg.measure_sweeps {
        c.sweep(spec)?;
        total += c.distance();
    }
    Ok(total / cfg.measure_sweeps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_without_crossing_is_an_error() {
        let cfg = ThresholdConfig {
            popdyn: PopDynConfig {
                pop_size: 2000,
                burn_in: 20,
                measure_sweeps: 5,
                batches: 5,
                ..PopDynConfig::default()
            },
            lo: 3.0,
            hi: 3.5,
            ..ThresholdConfig::default()
        };
        assert_eq!(find_alpha_c(&cfg), Err(Error::Bracketing { lo: 3.0, hi: 3.5 }));
    }

    #[test]
    fn identical_starts_stay_coupled() {
        let spec = EnsembleSpec::new(4.3).unwrap();
        let mut c = CoupledSp::new(1000, 4).unwrap();
        c.b = c.a.clone();
        for _ in 0..5 {
            c.sweep(&spec).unwrap();
        }
        assert_eq!(c.distance(), 0.0);
    }
}
