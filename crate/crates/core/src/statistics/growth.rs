use crate::maps::{IntervalMap, OrbitSampler, SamplerConfig};

/// Default tolerance of the periodicity screen.
pub const PERIODIC_TOL: f64 = 1e-12;
/// Default longest period screened.
pub const PERIODIC_MAX: usize = 64;

/// Smallest `k ⩽ max_period` with `|f^k(z) - z| ⩽ tol`.
pub fn is_periodic(map: &IntervalMap<f64>, z: f64, max_period: usize, tol: f64) -> Option<usize> {
    let mut y = z;
    for k in 1..=max_period {
        y = map.apply(y);
        if (y - z).abs() <= tol {
            return Some(k);
        }
    }
    None
}

/// `count` points drawn from the sampler that pass the periodicity screen.
pub fn aperiodic_centers(map: &IntervalMap<f64>, sampler: SamplerConfig, count: usize) -> Vec<f64> {
    OrbitSampler::new(map, sampler)
        .filter(|&z| is_periodic(map, z, PERIODIC_MAX, PERIODIC_TOL).is_none())
        .take(count)
        .collect()
}

/// `log|Dfⁿ(f(c))|` for `n = 1..=n_max` along the orbit of a critical value.
#[derive(Clone, Debug)]
pub struct GrowthSeries {
    pub critical_point: f64,
    pub log_series: Vec<f64>,
    /// Least-squares slope of the log series against `n`.
    pub alpha: f64,
    /// Least-squares slope of the log series against `log n`.
    pub beta: f64,
    /// The derivative collapsed to 0 or the series does not grow.
    pub non_growth: bool,
}

pub fn growth_diagnostic(map: &IntervalMap<f64>, n_max: usize) -> Vec<GrowthSeries> {
    map.critical_points()
        .iter()
        .map(|c| {
            let mut y = map.apply(c.location);
            let mut acc = 0.0f64;
            let mut log_series = Vec::with_capacity(n_max);
            for _ in 0..n_max {
                acc += map.deriv_left(y).abs().ln();
                log_series.push(acc);
                y = map.apply(y);
            }
            let finite = log_series.iter().take_while(|v| v.is_finite()).count();
            let ns: Vec<f64> = (1..=finite).map(|n| n as f64).collect();
            let alpha = slope(&ns, &log_series[..finite]);
            let logs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
            let beta = slope(&logs, &log_series[..finite]);
            let non_growth = finite < log_series.len() || !(alpha > 0.0);
            GrowthSeries { critical_point: c.location, log_series, alpha, beta, non_growth }
        })
        .collect()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
