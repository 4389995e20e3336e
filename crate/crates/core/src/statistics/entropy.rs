use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::inducing::first_return_with;
use crate::maps::{cylinder_of, IntervalMap, OrbitSampler, SamplerConfig};
use crate::parallel::{chunked, quota, CHUNKS};

use super::survival::ks_cdf;

/// Censored fraction above which an entropy sample carries a warning.
pub const OW_CENSORING_WARNING: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OwOptions {
    pub samples: usize,
    pub horizon: u64,
    pub sampler: SamplerConfig,
}

impl Default for OwOptions {
    fn default() -> Self {
        OwOptions { samples: 2000, horizon: 1_000_000_000, sampler: SamplerConfig::new(0) }
    }
}

/// `log r_{Z_n[x]}(x)` for `μ`-sampled `x`, plus the number of censored points.
pub fn log_returns(map: &IntervalMap<f64>, n: usize, opts: &OwOptions) -> Result<(Vec<f64>, usize)> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if opts.samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    let chunks = chunked(|c| -> Result<(Vec<f64>, usize)> {
        let cfg = opts.sampler.stream(opts.sampler.stream * CHUNKS as u64 + c as u64);
        let mut sampler = OrbitSampler::new(map, cfg);
        let mut logs = Vec::new();
        let mut censored = 0;
        for _ in 0..quota(opts.samples, c) {
            let x = sampler.next_sample();
            let z = cylinder_of(map, x, n)?;
            match first_return_with(|p| sampler.advance(p), &z.interval, x, opts.horizon) {
                Some(r) => logs.push((r as f64).ln()),
                None => censored += 1,
            }
        }
        Ok((logs, censored))
    });
    let mut logs = Vec::with_capacity(opts.samples);
    let mut censored = 0;
    for c in chunks {
        let (l, k) = c?;
        logs.extend(l);
        censored += k;
    }
    Ok((logs, censored))
}

/// Sample of `(1/n) log r_{Z_n[x]}(x)`.
#[derive(Clone, Debug)]
pub struct OwSample {
    pub n: usize,
    pub values: Vec<f64>,
    pub censored: usize,
    pub warning: Option<String>,
}

impl OwSample {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn stderr(&self) -> f64 {
        let m = self.mean();
        let k = self.values.len() as f64;
        let var = self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1.0).max(1.0);
        (var / k).sqrt()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / (self.censored + self.values.len()) as f64
    }
}

pub fn ow_entropy(map: &IntervalMap<f64>, n: usize, opts: &OwOptions) -> Result<OwSample> {
    let (logs, censored) = log_returns(map, n, opts)?;
    if logs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut s = OwSample { n, values: logs.into_iter().map(|l| l / n as f64).collect(), censored, warning: None };
    if s.censored_fraction() > OW_CENSORING_WARNING {
        s.warning = Some(format!(
            "{:.1}% of returns exceeded the horizon {}; n is too large for it",
            100.0 * s.censored_fraction(),
            opts.horizon
        ));
    }
    Ok(s)
}

/// Writes `n,mean,stderr,censored_fraction`, one row per sample.
pub fn write_ow_csv<W: Write>(rows: &[OwSample], mut w: W) -> Result<()> {
    writeln!(w, "n,mean,stderr,censored_fraction")?;
    for s in rows {
        writeln!(w, "{},{},{},{}", s.n, s.mean(), s.stderr(), s.censored_fraction())?;
    }
    Ok(())
}

/// Normalised log return times `(log r - n h) / (σ √n)`.
#[derive(Clone, Debug)]
pub struct FluctuationSample {
    pub n: usize,
    pub h: f64,
    pub sigma: f64,
    pub values: Vec<f64>,
    pub censored: usize,
    /// Kolmogorov distance to the standard normal law.
    pub ks: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FluctuationSummary {
    pub n: usize,
    pub h: f64,
    pub sigma: f64,
    pub ks: f64,
    #[serde(rename = "N")]
    pub samples: usize,
}

impl FluctuationSample {
    /// Normalises precomputed `log r` values.
    pub fn from_log_returns(n: usize, h: f64, sigma: f64, logs: &[f64], censored: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::DegenerateVariance { sigma });
        }
        let scale = sigma * (n as f64).sqrt();
        let values: Vec<f64> = logs.iter().map(|l| (l - n as f64 * h) / scale).filter(|v| v.is_finite()).collect();
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let normal = Normal::standard();
        let ks = ks_cdf(&sorted, |t| normal.cdf(t));
        Ok(FluctuationSample { n, h, sigma, values, censored, ks })
    }

    pub fn summary(&self) -> FluctuationSummary {
        FluctuationSummary { n: self.n, h: self.h, sigma: self.sigma, ks: self.ks, samples: self.values.len() }
    }

    /// Writes `value`, one normalised sample per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "value")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

pub fn fluctuation_test(map: &IntervalMap<f64>, n: usize, h: f64, sigma: f64, opts: &OwOptions) -> Result<FluctuationSample> {
    if !(sigma > 0.0) {
        return Err(Error::DegenerateVariance { sigma });
    }
    let (logs, censored) = log_returns(map, n, opts)?;
    FluctuationSample::from_log_returns(n, h, sigma, &logs, censored)
}
