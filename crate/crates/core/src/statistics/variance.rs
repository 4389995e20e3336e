use crate::error::{invalid, Error, Result};
use crate::maps::{IntervalMap, OrbitSampler, SamplerConfig};

/// Truncated series `Var(φ) + 2 Σ_{k=1}^{L} Cov(φ, φ∘f^k)`.
#[derive(Clone, Debug)]
pub struct VarianceEstimate {
    pub sigma2: f64,
    /// Partial sums after including lags `0..=L`.
    pub trajectory: Vec<f64>,
    pub samples: usize,
    /// The estimate is negative beyond its rough standard error, which points
    /// at a truncation artifact.
    pub flagged: bool,
}

/// Default truncation lag.
pub const DEFAULT_MAX_LAG: usize = 200;

pub fn sigma2_from_series(series: &[f64], max_lag: usize) -> Result<VarianceEstimate> {
    let n = series.len();
    if n < 2 {
        return Err(Error::EmptySample);
    }
    if max_lag >= n {
        return Err(invalid("max_lag", format!("must be below the series length {n}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| c.iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let c0 = autocov(0);
    let mut trajectory = Vec::with_capacity(max_lag + 1);
    let mut acc = c0;
    trajectory.push(acc);
    for k in 1..=max_lag {
        acc += 2.0 * autocov(k);
        trajectory.push(acc);
    }
    let se = c0 * (2.0 * (2 * max_lag + 1) as f64 / n as f64).sqrt();
    Ok(VarianceEstimate { sigma2: acc, trajectory, samples: n, flagged: acc < -3.0 * se })
}

/// Estimates `σ²` of `φ` along a single orbit of length `n`.
pub fn variance_sigma2(
    map: &IntervalMap<f64>,
    sampler: SamplerConfig,
    phi: impl Fn(f64) -> f64,
    max_lag: usize,
    n: usize,
) -> Result<VarianceEstimate> {
    let mut s = OrbitSampler::new(map, sampler.with_stride(1));
    let series: Vec<f64> = (0..n).map(|_| phi(s.next_sample())).collect();
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(invalid("phi", format!("non-finite value at orbit step {i}")));
    }
    sigma2_from_series(&series, max_lag)
}

/// Birkhoff estimate of `∫ (log|Df|)² dμ`.
#[derive(Clone, Debug)]
pub struct L2Trace {
    pub estimate: f64,
    /// `(N, estimate after N steps)` at `N = 1000 · 2^j` and at the end.
    pub trace: Vec<(u64, f64)>,
    /// Orbit points where `log|Df|` was not finite; they are skipped.
    pub critical_hits: u64,
    /// More than one doubling of `N` moved the estimate by over 20%.
    pub flagged: bool,
}

pub fn l2_check(map: &IntervalMap<f64>, sampler: SamplerConfig, n: u64) -> Result<L2Trace> {
    if n == 0 {
        return Err(invalid("n", "need at least one step"));
    }
    let mut s = OrbitSampler::new(map, sampler.with_stride(1));
    let (mut sum, mut used, mut critical_hits) = (0.0f64, 0u64, 0u64);
    let mut trace = Vec::new();
    let mut next = 1000u64;
    for i in 1..=n {
        let l = map.deriv_left(s.next_sample()).abs().ln();
        if l.is_finite() {
            sum += l * l;
            used += 1;
        } else {
            critical_hits += 1;
        }
        if i == next || i == n {
            trace.push((i, sum / used.max(1) as f64));
            next = next.saturating_mul(2);
        }
    }
    if used == 0 {
        return Err(Error::EmptySample);
    }
    let jumps = trace.windows(2).filter(|w| (w[1].1 - w[0].1).abs() > 0.2 * w[0].1.abs()).count();
    Ok(L2Trace { estimate: sum / used as f64, trace, critical_hits, flagged: jumps > 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn doubling_is_a_coboundary() {
        let m = IntervalMap::<f64>::doubling();
        let l2 = 2f64.ln();
        let v = variance_sigma2(&m, SamplerConfig::new(1), |x| m.deriv_left(x).abs().ln() - l2, 20, 10_000).unwrap();
        assert_eq!(v.sigma2, 0.0);
        assert!(!v.flagged);
    }

    #[test]
    fn skewlinear_bernoulli_variance() {
        let w = [1.0 / 3.0, 2.0 / 3.0];
        let m = IntervalMap::<f64>::skew_linear(&w).unwrap();
        let h: f64 = -w.iter().map(|p| p * p.ln()).sum::<f64>();
        let m2: f64 = w.iter().map(|p| p * p.ln() * p.ln()).sum();
        let v = variance_sigma2(&m, SamplerConfig::new(2), |x| m.deriv_left(x).abs().ln() - h, 20, 400_000).unwrap();
        assert!((v.sigma2 - (m2 - h * h)).abs() < 0.01, "{}", v.sigma2);
        // symbols are independent: lags add nothing
        assert!((v.trajectory[0] - v.sigma2).abs() < 0.01);
    }

    #[test]
    fn lag_zero_is_the_sample_variance() {
        let v = sigma2_from_series(&[1.0, 2.0, 3.0, 4.0], 0).unwrap();
        assert_eq!(v.sigma2, 1.25);
        assert!(sigma2_from_series(&[1.0], 0).is_err());
    }

    #[test]
    fn iid_error_shrinks_like_root_n() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut errs = Vec::new();
        for n in [1_000usize, 100_000] {
            let reps = 20;
            let mut e = 0.0;
            for _ in 0..reps {
                let xs: Vec<f64> = (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 2.0 * z }).collect();
                e += (sigma2_from_series(&xs, 5).unwrap().sigma2 - 4.0).powi(2);
            }
            errs.push((e / reps as f64).sqrt());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 5.0 && ratio < 20.0, "{errs:?}");
    }

    #[test]
    fn l2_doubling_is_exact() {
        let m = IntervalMap::<f64>::doubling();
        let t = l2_check(&m, SamplerConfig::new(1), 10_000).unwrap();
        assert!((t.estimate - 2f64.ln().powi(2)).abs() < 1e-12);
        assert_eq!(t.trace.last().unwrap().0, 10_000);
        assert!(!t.flagged);
    }
}
