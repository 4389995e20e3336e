use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::interval::Interval;
use crate::maps::AnalyticDensity;

use super::TowerGraph;

/// Largest bin width used on tower domains.
pub const MAX_BIN_WIDTH: f64 = 1e-3;

/// Mass histogram on uniform bins of `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub weights: Vec<f64>,
}

impl Histogram {
    pub fn zeros(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram { lo, hi, weights: vec![0.0; bins.max(1)] }
    }

    /// Bin masses of an absolutely continuous law.
    pub fn from_density(d: &AnalyticDensity, bins: usize) -> Self {
        let s = d.support();
        let mut h = Self::zeros(s.lo, s.hi, bins);
        for i in 0..h.weights.len() {
            h.weights[i] = d.measure(&h.bin(i));
        }
        h
    }

    /// Normalised occupation histogram of a sample.
    pub fn from_samples(lo: f64, hi: f64, bins: usize, samples: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Self::zeros(lo, hi, bins);
        let mut n = 0usize;
        for x in samples {
            let i = h.index(x);
            h.weights[i] += 1.0;
            n += 1;
        }
        if n > 0 {
            h.weights.iter_mut().for_each(|w| *w /= n as f64);
        }
        h
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.weights.len() as f64
    }

    pub fn bin(&self, i: usize) -> Interval<f64> {
        let n = self.weights.len() as f64;
        let w = self.hi - self.lo;
        Interval::new(self.lo + w * i as f64 / n, self.lo + w * (i + 1) as f64 / n)
    }

    pub fn index(&self, x: f64) -> usize {
        let n = self.weights.len();
        let t = ((x - self.lo) / (self.hi - self.lo) * n as f64).floor();
        (t.max(0.0) as usize).min(n - 1)
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Adds `mass` spread uniformly over `piece`.
    pub fn deposit(&mut self, piece: &Interval<f64>, mass: f64) {
        if mass == 0.0 {
            return;
        }
        let w = piece.width();
        if w <= 0.0 {
            let i = self.index(piece.lo);
            self.weights[i] += mass;
            return;
        }
        let (a, b) = (self.index(piece.lo), self.index(piece.hi));
        for i in a..=b {
            if let Some(o) = self.bin(i).intersect(piece) {
                self.weights[i] += mass * o.width() / w;
            }
        }
    }

    /// `Σ |a_i - b_i|`; the grids must agree.
    pub fn l1_distance(&self, other: &Histogram) -> f64 {
        self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// Per-domain grids `Δ_D` and their weights.
#[derive(Clone, Debug)]
pub struct LiftedMeasure {
    /// One histogram per tower domain, indexed by domain id.
    pub domains: Vec<Histogram>,
    /// Number of Cesàro terms `k`.
    pub steps: usize,
    /// Mass pushed into pruned successors, averaged like the measure itself.
    pub lost_mass: f64,
    /// Total mass of `μ̂_j` for `j = 0..k`.
    pub retained_trajectory: Vec<f64>,
    /// Total variation between `μ̂_k` and `μ̂_{k-1}`.
    pub cauchy_gap: f64,
    /// Lost mass above one half: liftability cannot be judged.
    pub warning: Option<String>,
}

impl LiftedMeasure {
    pub fn total(&self) -> f64 {
        self.domains.iter().map(Histogram::total).sum()
    }

    /// Marginal on the base grid: each domain bin is spread uniformly over
    /// the base bins it overlaps.
    pub fn project(&self, base: &Histogram) -> Histogram {
        let mut out = Histogram::zeros(base.lo, base.hi, base.bins());
        for h in &self.domains {
            for (i, &w) in h.weights.iter().enumerate() {
                out.deposit(&h.bin(i), w);
            }
        }
        out
    }

    /// Writes `domain_id,bin_left,bin_right,weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "domain_id,bin_left,bin_right,weight")?;
        for (d, h) in self.domains.iter().enumerate() {
            for (i, &m) in h.weights.iter().enumerate() {
                let b = h.bin(i);
                writeln!(w, "{d},{},{},{m}", b.lo, b.hi)?;
            }
        }
        Ok(())
    }
}

/// Column of the push-forward: contributions `(source bin, fraction)` to one
/// target bin, with bins numbered globally across domains.
type Column = Vec<(u32, f64)>;

/// Cesàro means `μ̂_k = (1/k) Σ_{j<k} μ̂_0 ∘ f̂^{-j}` of the lift of
/// `base_hist`, discretised on per-domain grids with bins no wider than the
/// base bins (and at most [`MAX_BIN_WIDTH`]).
///
/// Mass in a bin is treated as uniform within the bin and carried by each
/// arrow `D → D'` onto the image of its piece, which is then re-binned on
/// `D'` (Ulam's scheme on the tower).
pub fn lift_measure(graph: &TowerGraph<f64>, base_hist: &Histogram, k: usize) -> Result<LiftedMeasure> {
    if k == 0 {
        return Err(invalid("k", "need at least one Cesàro term"));
    }
    let total = base_hist.total();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid("base_hist", format!("must be normalised, total mass {total}")));
    }
    let base = graph.map().domain();
    if (base_hist.lo - base.lo).abs() > 1e-12 || (base_hist.hi - base.hi).abs() > 1e-12 {
        return Err(invalid("base_hist", "grid must span the base domain"));
    }
    let h = base_hist.bin_width().min(MAX_BIN_WIDTH);
    let mut grids: Vec<Histogram> = graph
        .domains()
        .iter()
        .map(|d| {
            if d.id == 0 {
                base_hist.clone()
            } else {
                let n = (d.interval.width() / h).ceil().max(1.0) as usize;
                Histogram::zeros(d.interval.lo, d.interval.hi, n)
            }
        })
        .collect();
    let offsets: Vec<usize> = grids
        .iter()
        .scan(0, |acc, g| {
            let o = *acc;
            *acc += g.bins();
            Some(o)
        })
        .collect();
    let n_bins = offsets.last().unwrap() + grids.last().unwrap().bins();

    // triplets (target, source, fraction), then columns by target
    let mut triplets: Vec<(u32, u32, f64)> = Vec::new();
    let mut leaks = vec![false; n_bins];
    for (d, grid) in grids.iter().enumerate() {
        if !graph.is_expanded(d) {
            for i in 0..grid.bins() {
                leaks[offsets[d] + i] = true;
            }
        }
        for &(b, t) in graph.successors(d) {
            let branch = graph.map().branch(b as usize);
            let target = &grids[t];
            for i in 0..grid.bins() {
                let bin = grid.bin(i);
                let Some(piece) = bin.intersect_open(&branch.interval) else { continue };
                let frac = piece.width() / bin.width();
                let img = branch.image_of(&piece);
                let img = Interval::new(img.lo.max(target.lo), img.hi.min(target.hi));
                let mut spread = Histogram::zeros(target.lo, target.hi, target.bins());
                spread.deposit(&img, frac);
                for (j, &w) in spread.weights.iter().enumerate() {
                    if w > 0.0 {
                        triplets.push(((offsets[t] + j) as u32, (offsets[d] + i) as u32, w));
                    }
                }
            }
        }
    }
    triplets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut columns: Vec<Column> = vec![Vec::new(); n_bins];
    for (t, s, w) in triplets {
        columns[t as usize].push((s, w));
    }

    let mut cur = vec![0.0; n_bins];
    cur[..base_hist.bins()].copy_from_slice(&base_hist.weights);
    let mut sum = cur.clone();
    let mut prev_mean = cur.clone();
    let mut lost = 0.0;
    let mut lost_sum = 0.0;
    let mut trajectory = vec![1.0];
    let mut gap = 0.0;
    for j in 1..k {
        let leaked: f64 = cur.iter().zip(&leaks).filter(|(_, &l)| l).map(|(m, _)| m).sum();
        lost += leaked;
        let next: Vec<f64> = columns
            .par_iter()
            .map(|col| col.iter().map(|&(s, w)| w * cur[s as usize]).sum())
            .collect();
        cur = next;
        trajectory.push(cur.iter().sum());
        lost_sum += lost;
        for (a, b) in sum.iter_mut().zip(&cur) {
            *a += b;
        }
        if j == k - 1 {
            let inv = 1.0 / (j + 1) as f64;
            gap = sum.iter().zip(&prev_mean).map(|(s, p)| (s * inv - p).abs()).sum();
        } else {
            let inv = 1.0 / (j + 1) as f64;
            for (p, s) in prev_mean.iter_mut().zip(&sum) {
                *p = s * inv;
            }
        }
    }
    let inv = 1.0 / k as f64;
    for (d, g) in grids.iter_mut().enumerate() {
        let o = offsets[d];
        for (i, w) in g.weights.iter_mut().enumerate() {
            *w = sum[o + i] * inv;
        }
    }
    let lost_mass = lost_sum * inv;
    let warning = (lost_mass > 0.5)
        .then(|| format!("{:.1}% of the mass left the truncated tower; liftability cannot be assessed", 100.0 * lost_mass));
    Ok(LiftedMeasure { domains: grids, steps: k, lost_mass, retained_trajectory: trajectory, cauchy_gap: gap, warning })
}
