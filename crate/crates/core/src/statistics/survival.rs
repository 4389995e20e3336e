use std::io::Write;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Return target `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    /// `B(z, radius)` clipped to the domain.
    Ball { center: f64, radius: f64 },
    /// `Z_n[z]`.
    Cylinder { center: f64, level: usize },
}

impl Target {
    pub fn center(&self) -> f64 {
        match *self {
            Target::Ball { center, .. } | Target::Cylinder { center, .. } => center,
        }
    }
}

/// Where `μ(U)` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureSource {
    Analytic,
    Occupation,
}

/// Scaled conditional return times `r_U · μ(U)` for `x ∈ U`.
#[derive(Clone, Debug)]
pub struct EmpiricalSurvival {
    pub target: Target,
    pub interval: Interval<f64>,
    /// `μ(U)` used for scaling.
    pub mu: f64,
    pub mu_source: MeasureSource,
    /// Occupation estimate, kept for cross-checking the analytic value.
    pub mu_occupation: f64,
    /// Finite scaled times, sorted increasingly.
    times: Vec<f64>,
    /// Returns longer than the horizon. They count as `+∞`.
    pub censored: usize,
    pub warning: Option<String>,
}

impl EmpiricalSurvival {
    /// Sorts `times`; censored samples enter the denominator only.
    pub fn new(target: Target, interval: Interval<f64>, mu: f64, mut times: Vec<f64>, censored: usize) -> Result<Self> {
        if times.is_empty() && censored == 0 {
            return Err(Error::EmptySample);
        }
        times.sort_by(f64::total_cmp);
        Ok(EmpiricalSurvival {
            target,
            interval,
            mu,
            mu_source: MeasureSource::Analytic,
            mu_occupation: f64::NAN,
            times,
            censored,
            warning: None,
        })
    }

    /// Sample with no target attached (synthetic data, tests).
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        Self::new(Target::Ball { center: f64::NAN, radius: f64::NAN }, Interval::new(0.0, 0.0), f64::NAN, times, 0)
    }

    /// Sample size including censored entries.
    pub fn len(&self) -> usize {
        self.times.len() + self.censored
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.len() as f64
    }

    /// `S(t) = #{s > t} / N`.
    pub fn survival(&self, t: f64) -> f64 {
        let le = self.times.partition_point(|&s| s <= t);
        (self.len() - le) as f64 / self.len() as f64
    }

    /// Mean of the finite scaled times (Kac puts it at 1).
    pub fn mean(&self) -> f64 {
        self.times.iter().sum::<f64>() / self.times.len() as f64
    }

    /// Distinct jump points with `S` just after each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.times.len() {
            let t = self.times[i];
            let j = i + self.times[i..].partition_point(|&s| s <= t);
            out.push((t, (self.len() - j) as f64 / n));
            i = j;
        }
        out
    }

    /// Writes `t,empirical_survival,reference_survival` at every jump point.
    pub fn write_csv<W: Write>(&self, reference: impl Fn(f64) -> f64, mut w: W) -> Result<()> {
        writeln!(w, "t,empirical_survival,reference_survival")?;
        writeln!(w, "0,1,{}", reference(0.0))?;
        for (t, s) in self.steps() {
            writeln!(w, "{t},{s},{}", reference(t))?;
        }
        Ok(())
    }
}

/// `sup_{t ⩾ 0} |S(t) - G(t)|` for a nonincreasing reference survival `G`.
///
/// Between jumps `S` is constant and `G` monotone, so the supremum is
/// attained at the one-sided limits at the jump points.
pub fn ks_distance(emp: &EmpiricalSurvival, g: impl Fn(f64) -> f64) -> f64 {
    let mut before = 1.0;
    let mut d = (1.0 - g(0.0)).abs();
    for (t, after) in emp.steps() {
        let gt = g(t);
        d = d.max((before - gt).abs()).max((after - gt).abs());
        before = after;
    }
    // tail: S stays at the censored fraction while G decays to its limit
    d.max((before - g(f64::INFINITY)).abs())
}

/// KS distance to `G(t) = e^{-t}`.
pub fn ks_exponential(emp: &EmpiricalSurvival) -> f64 {
    ks_distance(emp, |t| (-t).exp())
}

/// Kolmogorov distance between the empirical distribution of `sorted` and
/// the continuous distribution function `cdf`.
pub fn ks_cdf(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i];
        let j = i + sorted[i..].partition_point(|&s| s <= t);
        let f = cdf(t);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// Two-sample distance `sup_t |S_a(t) - S_b(t)|`. Both are right-continuous
/// step functions, so it suffices to compare them at every jump point.
pub fn ks_between(a: &EmpiricalSurvival, b: &EmpiricalSurvival) -> f64 {
    let mut d = (a.survival(0.0) - b.survival(0.0)).abs();
    for &t in a.times.iter().chain(&b.times) {
        d = d.max((a.survival(t) - b.survival(t)).abs());
    }
    d.max((a.censored_fraction() - b.censored_fraction()).abs())
}
