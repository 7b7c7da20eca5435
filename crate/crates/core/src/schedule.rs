use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;

/// Order in which clauses are visited during a sequential sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum UpdateOrder {
    /// Fresh permutation per sweep, seeded from `(rng_seed, sweep index)`.
    #[default]
    RandomPermutation,
    Fixed,
}

/// Fills `order` with the clause visiting order for sweep `sweep`.
pub(crate) fn sweep_order(order: &mut Vec<usize>, m: usize, kind: UpdateOrder, seed: u64, sweep: usize) {
    order.clear();
    order.extend(0..m);
    if kind == UpdateOrder::RandomPermutation {
        order.shuffle(&mut rng::rng_stream(seed, sweep as u64));
    }
}

/// Log-domain running product with an exact count of zero factors, so a
/// single factor can be divided back out even when it is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct LogProduct {
    pub log: f64,
    pub zeros: u32,
}

/// Factors below this are treated as exact zeros.
pub(crate) const TINY: f64 = 1e-300;

impl LogProduct {
    pub const ONE: LogProduct = LogProduct { log: 0.0, zeros: 0 };

    #[inline]
    pub fn mul(&mut self, x: f64) {
        if x < TINY {
            self.zeros += 1;
        } else {
            self.log += x.ln();
        }
    }

    #[inline]
    pub fn div(&mut self, x: f64) {
        if x < TINY {
            self.zeros -= 1;
        } else {
            self.log -= x.ln();
        }
    }

    /// Multiplies by the factor whose [`ln_factor`] is `l`.
    #[inline]
    pub fn mul_ln(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            self.zeros += 1;
        } else {
            self.log += l;
        }
    }

    #[inline]
    pub fn div_ln(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            self.zeros -= 1;
        } else {
            self.log -= l;
        }
    }

    /// The product without factor `x`.
    #[inline]
    pub fn without(self, x: f64) -> LogProduct {
        let mut p = self;
        p.div(x);
        p
    }

    #[inline]
    pub fn value(self) -> f64 {
        if self.zeros > 0 {
            0.0
        } else {
            self.log.exp()
        }
    }
}

/// `ln x`, or `-inf` for factors [`LogProduct`] counts as zeros.
#[inline]
pub(crate) fn ln_factor(x: f64) -> f64 {
    if x < TINY {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// Clauses ahead of the current one whose edge data a sequential sweep
/// pulls into cache.
pub(crate) const PREFETCH_DISTANCE: usize = 8;

#[inline(always)]
pub(crate) fn prefetch<T>(x: &T) {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: prefetching is a hint and never faults, whatever the address.
    unsafe {
        use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        _mm_prefetch::<_MM_HINT_T0>((x as *const T).cast());
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = x;
}
