use crate::error::{Error, Result};
use crate::real::Real;

use super::OrbitSampler;

/// `log|Df|` values below this abort instead of propagating `-∞`.
pub const LOG_DERIVATIVE_FLOOR: f64 = -690.7755278982137; // ln(1e-300)

/// Repeated guard hits before the estimate is abandoned.
const MAX_GUARD_HITS: usize = 8;

#[derive(Clone, Debug)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub samples: usize,
    /// Orbit points skipped because `|Df|` underflowed the guard.
    pub guard_hits: usize,
}

/// Birkhoff average of `log|Df|` over `n` retained sampler points.
pub fn lyapunov<T: Real>(sampler: &mut OrbitSampler<'_, T>, n: usize) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(crate::error::invalid("n", "need at least one sample"));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut guard_hits = 0usize;
    for step in 0..n {
        let x = sampler.next_sample();
        let d = sampler.interval_map().deriv_left(x).abs().as_f64();
        let l = d.ln();
        if !(l >= LOG_DERIVATIVE_FLOOR) {
            guard_hits += 1;
            if guard_hits > MAX_GUARD_HITS {
                return Err(Error::CriticalOrbit { step, x: x.as_f64() });
            }
            continue;
        }
        sum += l;
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptySample);
    }
    Ok(LyapunovEstimate { value: sum / used as f64, samples: used, guard_hits })
}
