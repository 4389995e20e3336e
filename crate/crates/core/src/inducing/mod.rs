//! First returns, δ-extendible returns and inducing schemes.
//!
//! The δ-extendible return time is computed by tracking the image
//! `M_i = f^i(Z_i[x])` of the maximal monotone branch of `f^i` through `x`:
//! `M_1 = f(Z_1[x])` and `M_{i+1} = f(M_i ∩ Z_1[f^i x])`. The return at time
//! `i` is extendible when `f^i x ∈ Y` and `Y' ⊆ M_i`.

mod kac;
mod scheme;

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::maps::IntervalMap;
use crate::real::Real;

pub use kac::{kac_check, non_extendible_fraction, ExtendibilityEstimate, KacEstimate};
pub use scheme::{
    build_inducing_scheme, project_induced_measure, project_induced_measure_with, Extension, InducedBranch,
    InducingScheme, SchemeOptions,
};

/// Default horizon for pointwise return times.
pub const DEFAULT_HORIZON: u64 = 10_000_000;

/// `Y ⊂ Y'` with both gaps of length `δ|Y|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledNeighbourhood<T> {
    pub y: Interval<T>,
    pub delta: T,
    pub y_prime: Interval<T>,
}

impl<T: Real> ScaledNeighbourhood<T> {
    pub fn new(y: Interval<T>, delta: T, domain: Interval<T>) -> Result<Self> {
        if !(y.width() > T::zero()) {
            return Err(invalid("Y", "must have positive length"));
        }
        if !(delta > T::zero()) {
            return Err(invalid("delta", format!("must be positive, got {delta}")));
        }
        let gap = delta * y.width();
        let y_prime = Interval::new(y.lo - gap, y.hi + gap);
        if !domain.contains_interval(&y_prime) {
            return Err(Error::NeighbourhoodOutsideDomain { lo: y_prime.lo.as_f64(), hi: y_prime.hi.as_f64() });
        }
        Ok(ScaledNeighbourhood { y, delta, y_prime })
    }
}

/// Least `i ∈ [1, horizon]` with `f^i(x) ∈ Y`, `None` past the horizon.
pub fn first_return_time<T: Real>(map: &IntervalMap<T>, y: &Interval<T>, x: T, horizon: u64) -> Option<u64> {
    first_return_with(|p| map.apply(p), y, x, horizon)
}

/// First return along an arbitrary stepping rule (e.g. a dithered sampler).
#[inline]
pub fn first_return_with<T: Real>(mut step: impl FnMut(T) -> T, y: &Interval<T>, x: T, horizon: u64) -> Option<u64> {
    let mut p = x;
    for i in 1..=horizon {
        p = step(p);
        if y.contains(p) {
            return Some(i);
        }
    }
    None
}

/// One step of the image tracker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep<T> {
    pub i: u64,
    /// `f^i(x)`
    pub point: T,
    /// `M_i`
    pub image: Interval<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnRecord<T> {
    pub x: T,
    /// First return time `r`.
    pub r: Option<u64>,
    /// First δ-extendible return time `τ`.
    pub tau: Option<u64>,
    /// The first return is already extendible (`τ = r`).
    pub extendible_at_r: bool,
    /// Some orbit point sat on a branch endpoint.
    pub ambiguous: bool,
}

/// Image tracker for `f^i` along the orbit of one point.
#[derive(Clone, Debug)]
pub struct ImageTracker<'a, T> {
    map: &'a IntervalMap<T>,
    point: T,
    image: Interval<T>,
    ambiguous: bool,
}

impl<'a, T: Real> ImageTracker<'a, T> {
    pub fn new(map: &'a IntervalMap<T>, x: T) -> Self {
        ImageTracker { map, point: x, image: map.domain(), ambiguous: false }
    }

    pub fn point(&self) -> T {
        self.point
    }

    pub fn image(&self) -> Interval<T> {
        self.image
    }

    pub fn ambiguous(&self) -> bool {
        self.ambiguous
    }

    /// Advances to `f^{i+1}`; `next` is the new orbit point (normally
    /// `f(point)`, possibly perturbed by the caller).
    #[inline]
    pub fn advance_to(&mut self, next: T) {
        let map = self.map;
        let mut b = map.branch_index(self.point);
        let mut piece = self.image.intersect_open(&map.branch(b).interval);
        if map.is_branch_boundary(self.point) {
            self.ambiguous = true;
            if piece.is_none() {
                // the image touches this branch only at the orbit point
                b += 1;
                piece = self.image.intersect_open(&map.branch(b).interval);
            }
        }
        let piece = piece.unwrap_or(Interval { lo: self.point, hi: self.point });
        let img = map.branch(b).image_of(&piece);
        let dom = map.domain();
        self.image = Interval::new(img.lo.max(dom.lo), img.hi.min(dom.hi));
        self.point = next;
    }

    #[inline]
    pub fn advance(&mut self) {
        let next = self.map.apply(self.point);
        self.advance_to(next);
    }
}

/// First δ-extendible return time of `x ∈ Y`, together with the plain
/// first return time.
pub fn extendible_return_time<T: Real>(
    map: &IntervalMap<T>,
    nbhd: &ScaledNeighbourhood<T>,
    x: T,
    horizon: u64,
) -> Result<ReturnRecord<T>> {
    extendible_return_impl(map, nbhd, x, horizon, None)
}

/// As [`extendible_return_time`], also recording `(f^i x, M_i)` per step.
pub fn extendible_return_trace<T: Real>(
    map: &IntervalMap<T>,
    nbhd: &ScaledNeighbourhood<T>,
    x: T,
    horizon: u64,
) -> Result<(ReturnRecord<T>, Vec<TraceStep<T>>)> {
    let mut trace = Vec::new();
    let rec = extendible_return_impl(map, nbhd, x, horizon, Some(&mut trace))?;
    Ok((rec, trace))
}

fn extendible_return_impl<T: Real>(
    map: &IntervalMap<T>,
    nbhd: &ScaledNeighbourhood<T>,
    x: T,
    horizon: u64,
    mut trace: Option<&mut Vec<TraceStep<T>>>,
) -> Result<ReturnRecord<T>> {
    if !nbhd.y.contains(x) {
        return Err(invalid("x", format!("{x} is not in Y = {}", nbhd.y)));
    }
    let mut t = ImageTracker::new(map, x);
    let mut r = None;
    let mut tau = None;
    for i in 1..=horizon {
        t.advance();
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TraceStep { i, point: t.point(), image: t.image() });
        }
        if nbhd.y.contains(t.point()) {
            r.get_or_insert(i);
            if t.image().contains_interval(&nbhd.y_prime) {
                tau = Some(i);
                break;
            }
        }
    }
    Ok(ReturnRecord { x, r, tau, extendible_at_r: r.is_some() && r == tau, ambiguous: t.ambiguous() })
}

/// Writes `x,r,tau,extendible`; censored times are left empty.
pub fn write_return_records<T: Real, W: Write>(records: &[ReturnRecord<T>], mut w: W) -> Result<()> {
    writeln!(w, "x,r,tau,extendible")?;
    let opt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
    for rec in records {
        writeln!(w, "{},{},{},{}", rec.x, opt(rec.r), opt(rec.tau), rec.extendible_at_r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbourhood_examples() {
        let dom = Interval::<f64>::unit();
        let n = ScaledNeighbourhood::new(Interval::new(0.4, 0.6), 0.5, dom).unwrap();
        assert!((n.y_prime.lo - 0.3).abs() < 1e-15 && (n.y_prime.hi - 0.7).abs() < 1e-15);
        assert!(ScaledNeighbourhood::new(Interval::new(0.4, 0.6), 0.0, dom).is_err());
        assert!(matches!(
            ScaledNeighbourhood::new(Interval::new(0.0, 0.1), 0.5, dom),
            Err(Error::NeighbourhoodOutsideDomain { .. })
        ));
    }

    #[test]
    fn first_return_examples() {
        let d = IntervalMap::<f64>::doubling();
        let y = Interval::new(0.0, 0.25);
        // 0.1 -> 0.2
        assert_eq!(first_return_time(&d, &y, 0.1, 100), Some(1));
        // 0.2 -> 0.4 -> 0.8 -> 0.6 -> 0.2
        assert_eq!(first_return_time(&d, &y, 0.2, 100), Some(4));
        assert_eq!(first_return_time(&d, &y, 0.2, 3), None);
        // fixed point
        assert_eq!(first_return_time(&d, &y, 0.0, 10), Some(1));
    }

    #[test]
    fn full_branch_returns_are_extendible() {
        let d = IntervalMap::<f64>::doubling();
        let n = ScaledNeighbourhood::new(Interval::new(0.375, 0.5), 0.5, d.domain()).unwrap();
        for k in 0..50 {
            let x = 0.375 + 0.125 * (k as f64 + 0.5) / 50.0;
            let rec = extendible_return_time(&d, &n, x, 1000).unwrap();
            assert_eq!(rec.r, rec.tau);
            assert!(rec.extendible_at_r);
        }
    }

    #[test]
    fn trace_records_images() {
        let m = IntervalMap::<f64>::tent(2f64.sqrt()).unwrap();
        // Y' = [0.425, 0.525] sits inside the level-4 domain [√2 - 1, 2 - √2]
        let n = ScaledNeighbourhood::new(Interval::new(0.45, 0.5), 0.5, m.domain()).unwrap();
        let (rec, trace) = extendible_return_trace(&m, &n, 0.47, 1000).unwrap();
        assert_eq!(trace.len() as u64, rec.tau.unwrap());
        assert!((trace[0].image.hi - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(trace.iter().all(|s| s.image.contains(s.point)));
    }
}
