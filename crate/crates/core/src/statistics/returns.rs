use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::maps::{cylinder_of, IntervalMap, OrbitSampler, SamplerConfig};
use crate::parallel::{chunked, quota};

use super::survival::{EmpiricalSurvival, MeasureSource, Target};

/// Censored fraction above which a return-time sample carries a warning.
pub const CENSORING_WARNING: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RtsOptions {
    /// Conditional samples per target.
    pub samples: usize,
    /// Returns longer than this are censored.
    pub horizon: u64,
    pub sampler: SamplerConfig,
    /// Count time only while the orbit is in this interval, which turns
    /// return times into return times of the first return map to it.
    pub clock: Option<Interval<f64>>,
    /// Orbit length per chunk after which unfinished targets are an error.
    pub max_steps: u64,
}

impl Default for RtsOptions {
    fn default() -> Self {
        RtsOptions {
            samples: 100_000,
            horizon: 100_000_000,
            sampler: SamplerConfig::new(0),
            clock: None,
            max_steps: 10_000_000_000,
        }
    }
}

/// The interval `U` of a target.
pub fn resolve_target(map: &IntervalMap<f64>, target: &Target) -> Result<Interval<f64>> {
    let dom = map.domain();
    match *target {
        Target::Cylinder { center, level } => Ok(cylinder_of(map, center, level)?.interval),
        Target::Ball { center, radius } => {
            if !(radius > 0.0) {
                return Err(invalid("radius", "must be positive"));
            }
            Interval::new(center - radius, center + radius)
                .intersect(&dom)
                .ok_or(Error::OutsideDomain { x: center, lo: dom.lo, hi: dom.hi })
        }
    }
}

/// Ball with the same length as `Z_n[z]`.
pub fn matched_ball(map: &IntervalMap<f64>, center: f64, level: usize) -> Result<Target> {
    let c = cylinder_of(map, center, level)?;
    Ok(Target::Ball { center, radius: 0.5 * c.width })
}

/// Return-time statistics of a single target.
pub fn return_stats(map: &IntervalMap<f64>, target: Target, opts: &RtsOptions) -> Result<EmpiricalSurvival> {
    Ok(return_stats_many(map, &[target], opts)?.pop().expect("one target"))
}

/// Return-time statistics of several targets from shared orbits.
///
/// Each chunk runs its own orbit and records the gaps between consecutive
/// visits to every target; the gap following a visit is the first return
/// time of that visit, and visits of a stationary orbit are distributed as
/// `μ_U`. `μ(U)` comes from the registered density when there is one and
/// from the occupation fraction otherwise; both are reported.
pub fn return_stats_many(map: &IntervalMap<f64>, targets: &[Target], opts: &RtsOptions) -> Result<Vec<EmpiricalSurvival>> {
    if opts.samples < 100 {
        return Err(invalid("samples", "need at least 100 conditional samples"));
    }
    if opts.horizon == 0 || opts.horizon > u32::MAX as u64 {
        return Err(invalid("horizon", format!("must lie in [1, {}]", u32::MAX)));
    }
    let intervals = targets.iter().map(|t| resolve_target(map, t)).collect::<Result<Vec<_>>>()?;
    if let Some(y) = opts.clock {
        if let Some(u) = intervals.iter().find(|u| !y.contains_interval(u)) {
            return Err(invalid("clock", format!("target [{}, {}] is not inside the clock interval", u.lo, u.hi)));
        }
    }
    let stabber = Stabber::new(&intervals);
    let chunks = chunked(|c| collect_chunk(map, &stabber, quota(opts.samples, c), opts, c as u64));
    let chunks = chunks.into_iter().collect::<Result<Vec<_>>>()?;

    let density = map.density();
    let mu_clock = match (opts.clock, density) {
        (Some(y), Some(d)) => d.measure(&y),
        _ => 1.0,
    };
    let clock_steps: u64 = chunks.iter().map(|c| c.clock).sum();
    let mut out = Vec::with_capacity(targets.len());
    for (k, (target, u)) in targets.iter().zip(&intervals).enumerate() {
        let visits: u64 = chunks.iter().map(|c| c.visits[k]).sum();
        let occupation = visits as f64 / clock_steps as f64;
        let (mu, source) = match density {
            Some(d) => (d.measure(u) / mu_clock, MeasureSource::Analytic),
            None => (occupation, MeasureSource::Occupation),
        };
        if !(mu > 0.0) {
            return Err(Error::NoVisits { steps: clock_steps });
        }
        let censored = chunks.iter().map(|c| c.censored[k]).sum();
        let times = chunks.iter().flat_map(|c| c.gaps[k].iter().map(|&g| g as f64 * mu)).collect();
        let mut e = EmpiricalSurvival::new(*target, *u, mu, times, censored)?;
        e.mu_source = source;
        e.mu_occupation = occupation;
        if e.censored_fraction() > CENSORING_WARNING {
            e.warning = Some(format!(
                "{:.2}% of returns exceeded the horizon {}",
                100.0 * e.censored_fraction(),
                opts.horizon
            ));
        }
        out.push(e);
    }
    Ok(out)
}

struct ChunkOutput {
    gaps: Vec<Vec<u32>>,
    censored: Vec<usize>,
    visits: Vec<u64>,
    clock: u64,
}

fn collect_chunk(map: &IntervalMap<f64>, stabber: &Stabber, quota: usize, opts: &RtsOptions, chunk: u64) -> Result<ChunkOutput> {
    let n = stabber.targets.len();
    let mut sampler = OrbitSampler::new(map, opts.sampler.stream(opts.sampler.stream * crate::parallel::CHUNKS as u64 + chunk));
    let mut out = ChunkOutput { gaps: vec![Vec::with_capacity(quota); n], censored: vec![0; n], visits: vec![0; n], clock: 0 };
    let mut last = vec![u64::MAX; n];
    let mut remaining = if quota == 0 { 0 } else { n };
    let mut hits = Vec::new();
    let mut steps = 0u64;
    while remaining > 0 {
        let x = sampler.step();
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::NoVisits { steps });
        }
        if let Some(y) = opts.clock {
            if !y.contains(x) {
                continue;
            }
        }
        out.clock += 1;
        let t = out.clock;
        hits.clear();
        stabber.stab(x, &mut hits);
        for &k in &hits {
            let k = k as usize;
            out.visits[k] += 1;
            let done = out.gaps[k].len() + out.censored[k];
            if done < quota && last[k] != u64::MAX {
                let gap = t - last[k];
                if gap > opts.horizon {
                    out.censored[k] += 1;
                } else {
                    out.gaps[k].push(gap as u32);
                }
                if done + 1 == quota {
                    remaining -= 1;
                }
            }
            last[k] = t;
        }
    }
    Ok(out)
}

/// Interval stabbing by elementary segments between sorted endpoints.
struct Stabber {
    targets: Vec<Interval<f64>>,
    breaks: Vec<f64>,
    /// `segments[k]` lists the targets covering `(breaks[k-1], breaks[k])`.
    segments: Vec<Vec<u32>>,
}

impl Stabber {
    fn new(targets: &[Interval<f64>]) -> Self {
        let mut breaks: Vec<f64> = targets.iter().flat_map(|u| [u.lo, u.hi]).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut segments = vec![Vec::new(); breaks.len() + 1];
        for (k, u) in targets.iter().enumerate() {
            let a = breaks.partition_point(|&b| b < u.lo);
            let b = breaks.partition_point(|&b| b < u.hi);
            for seg in &mut segments[a + 1..=b] {
                seg.push(k as u32);
            }
        }
        Stabber { targets: targets.to_vec(), breaks, segments }
    }

    #[inline]
    fn stab(&self, x: f64, hits: &mut Vec<u32>) {
        let k = self.breaks.partition_point(|&b| b < x);
        if k < self.breaks.len() && self.breaks[k] == x {
            hits.extend((0..self.targets.len() as u32).filter(|&i| self.targets[i as usize].contains(x)));
        } else {
            hits.extend_from_slice(&self.segments[k]);
        }
    }
}
