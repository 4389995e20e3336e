//! Piecewise-monotone interval maps and their symbolic dynamics.
//!
//! A map is an ordered list of [`Branch`]es covering the domain. Each branch
//! carries a closed-form [`BranchLaw`] so that evaluation, differentiation and
//! inversion are exact up to floating rounding and extend past the branch
//! interval when a composition needs it (pullbacks, extensions).
//!
//! Points lying on a shared branch endpoint belong to the *left* branch. This
//! tie-break is used everywhere in the crate.

mod density;
mod gallery;
mod lyapunov;
mod partition;
mod sampler;
mod spec;

use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::real::Real;

pub use density::AnalyticDensity;
pub use gallery::{gallery_listing, Family};
pub use lyapunov::{lyapunov, LyapunovEstimate, LOG_DERIVATIVE_FLOOR};
pub use partition::{cylinder_interval, cylinder_of, format_word, Cylinder, CylinderPartition, PartitionCell, PartitionDiagnostics};
pub use sampler::{OrbitSampler, SamplerConfig};
pub use spec::{MapSpec, Param};

/// Symbol of a branch in an itinerary.
pub type Symbol = u16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Closed-form law of a single monotone branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchLaw<T> {
    /// `slope * x + intercept`
    Affine { slope: T, intercept: T },
    /// `a * x * (1 - x)`
    Quadratic { a: T },
    /// `b * x^3 + (1 - b) * x`
    Cubic { b: T },
}

impl<T: Real> BranchLaw<T> {
    #[inline]
    pub fn eval(&self, x: T) -> T {
        match *self {
            BranchLaw::Affine { slope, intercept } => slope * x + intercept,
            BranchLaw::Quadratic { a } => a * x * (T::one() - x),
            BranchLaw::Cubic { b } => x * (b * x * x + T::one() - b),
        }
    }

    #[inline]
    pub fn deriv(&self, x: T) -> T {
        match *self {
            BranchLaw::Affine { slope, .. } => slope,
            BranchLaw::Quadratic { a } => a * (T::one() - x - x),
            BranchLaw::Cubic { b } => T::lit(3.0) * b * x * x + T::one() - b,
        }
    }

    pub fn second_deriv(&self, x: T) -> T {
        match *self {
            BranchLaw::Affine { .. } => T::zero(),
            BranchLaw::Quadratic { a } => -(a + a),
            BranchLaw::Cubic { b } => T::lit(6.0) * b * x,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, BranchLaw::Affine { .. })
    }
}

/// A maximal interval of monotonicity together with its law.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch<T> {
    pub interval: Interval<T>,
    pub direction: Direction,
    pub law: BranchLaw<T>,
}

impl<T: Real> Branch<T> {
    #[inline]
    pub fn eval(&self, x: T) -> T {
        self.law.eval(x)
    }

    #[inline]
    pub fn deriv(&self, x: T) -> T {
        self.law.deriv(x)
    }

    /// Image of the whole branch interval.
    pub fn image(&self) -> Interval<T> {
        self.image_of(&self.interval)
    }

    /// Image of a subinterval; monotonicity makes this the hull of the
    /// endpoint images.
    #[inline]
    pub fn image_of(&self, i: &Interval<T>) -> Interval<T> {
        Interval::new(self.law.eval(i.lo), self.law.eval(i.hi))
    }

    /// Inverse of the branch law on the branch interval. `y` outside the
    /// branch image is extrapolated for affine laws and clamped otherwise.
    pub fn inverse(&self, y: T) -> T {
        match self.law {
            BranchLaw::Affine { slope, intercept } => (y - intercept) / slope,
            BranchLaw::Quadratic { a } => {
                let disc = (T::one() - T::lit(4.0) * y / a).max(T::zero()).sqrt();
                if self.interval.midpoint() <= T::lit(0.5) {
                    // (1 - disc)/2 without cancellation for small y
                    (y + y) / (a * (T::one() + disc))
                } else {
                    (T::one() + disc) * T::lit(0.5)
                }
            }
            BranchLaw::Cubic { .. } => self.inverse_bisect(y),
        }
    }

    /// Derivative of the inverse branch at `y`.
    pub fn inverse_deriv(&self, y: T) -> T {
        T::one() / self.deriv(self.inverse(y))
    }

    fn inverse_bisect(&self, y: T) -> T {
        let (mut lo, mut hi) = (self.interval.lo, self.interval.hi);
        let increasing = self.direction == Direction::Increasing;
        for _ in 0..200 {
            let mid = lo + (hi - lo) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            let below = self.law.eval(mid) < y;
            if below == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo + (hi - lo) * T::lit(0.5)
    }

    /// Preimage of `target` inside this branch, or `None` when the branch
    /// image misses the interior of `target`.
    pub fn pullback(&self, target: &Interval<T>) -> Option<Interval<T>> {
        let img = self.image();
        let hit = img.intersect_open(target)?;
        // endpoints of the image pull back to the branch ends exactly; near a
        // critical value the inverse is only good to √ε
        let (at_lo, at_hi) = match self.direction {
            Direction::Increasing => (self.interval.lo, self.interval.hi),
            Direction::Decreasing => (self.interval.hi, self.interval.lo),
        };
        let inv = |y: T| {
            if y == img.lo {
                at_lo
            } else if y == img.hi {
                at_hi
            } else {
                self.inverse(y)
            }
        };
        let a = inv(hit.lo);
        let b = inv(hit.hi);
        let pre = Interval::new(a, b);
        // pin to the branch so rounding never leaks into a neighbour
        Some(Interval::new(
            pre.lo.max(self.interval.lo).min(self.interval.hi),
            pre.hi.max(self.interval.lo).min(self.interval.hi),
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalKind {
    /// `Df(c) = 0`, non-flat of order `ℓ > 1`.
    Smooth,
    /// Turning point where the one-sided derivatives are nonzero (tent maps).
    Fold,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint<T> {
    pub location: T,
    pub order: T,
    pub kind: CriticalKind,
}

/// A piecewise-monotone self-map of a closed interval.
#[derive(Clone, Debug)]
pub struct IntervalMap<T> {
    domain: Interval<T>,
    branches: Vec<Branch<T>>,
    critical_points: Vec<CriticalPoint<T>>,
    family: Family,
    density: Option<AnalyticDensity>,
}

impl<T: Real> IntervalMap<T> {
    /// Assembles a map from explicit branches and validates it.
    pub fn from_branches(
        domain: Interval<T>,
        branches: Vec<Branch<T>>,
        critical_points: Vec<CriticalPoint<T>>,
        family: Family,
    ) -> Result<Self> {
        let map = IntervalMap {
            domain,
            branches,
            critical_points,
            family,
            density: None,
        };
        map.validate()?;
        Ok(map)
    }

    /// Builds a map from one smooth law on `domain`, locating the interior
    /// critical points by root-finding `Df = 0`.
    pub fn from_smooth_law(domain: Interval<T>, law: BranchLaw<T>, family: Family) -> Result<Self> {
        let roots = critical_roots(&law, &domain);
        let mut cuts = vec![domain.lo];
        let mut crit = Vec::with_capacity(roots.len());
        for c in roots {
            let order = if law.second_deriv(c).abs() > T::lit(1e-8) { 2.0 } else { 3.0 };
            crit.push(CriticalPoint { location: c, order: T::lit(order), kind: CriticalKind::Smooth });
            cuts.push(c);
        }
        cuts.push(domain.hi);
        let branches = cuts
            .windows(2)
            .map(|w| {
                let interval = Interval::new(w[0], w[1]);
                let direction = if law.deriv(interval.midpoint()) > T::zero() {
                    Direction::Increasing
                } else {
                    Direction::Decreasing
                };
                Branch { interval, direction, law }
            })
            .collect();
        Self::from_branches(domain, branches, crit, family)
    }

    pub fn with_density(mut self, density: AnalyticDensity) -> Self {
        self.density = Some(density);
        self
    }

    pub fn domain(&self) -> Interval<T> {
        self.domain
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn branch(&self, i: usize) -> &Branch<T> {
        &self.branches[i]
    }

    pub fn critical_points(&self) -> &[CriticalPoint<T>] {
        &self.critical_points
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Registered closed-form invariant density, if any.
    pub fn density(&self) -> Option<&AnalyticDensity> {
        self.density.as_ref()
    }

    /// Maximal critical order, 1 when there are no smooth critical points.
    pub fn max_critical_order(&self) -> f64 {
        self.critical_points
            .iter()
            .filter(|c| c.kind == CriticalKind::Smooth)
            .map(|c| c.order.as_f64())
            .fold(1.0, f64::max)
    }

    /// Index of the branch containing `x` (left tie-break on shared endpoints).
    #[inline]
    pub fn branch_index(&self, x: T) -> usize {
        let n = self.branches.len();
        if n <= 4 {
            for (i, b) in self.branches.iter().enumerate() {
                if x <= b.interval.hi {
                    return i;
                }
            }
            return n - 1;
        }
        let idx = self.branches.partition_point(|b| b.interval.hi < x);
        idx.min(n - 1)
    }

    /// Whether `x` is an interior endpoint shared by two branches.
    pub fn is_branch_boundary(&self, x: T) -> bool {
        self.branches[..self.branches.len().saturating_sub(1)]
            .iter()
            .any(|b| b.interval.hi == x)
    }

    fn check_domain(&self, x: T) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { x: x.as_f64(), lo: self.domain.lo.as_f64(), hi: self.domain.hi.as_f64() })
        }
    }

    /// `f(x)`.
    pub fn eval(&self, x: T) -> Result<T> {
        self.check_domain(x)?;
        Ok(self.apply(x))
    }

    /// `f(x)` without the domain check; the result is clamped into the domain
    /// to absorb rounding at the branch ends.
    #[inline]
    pub fn apply(&self, x: T) -> T {
        let b = &self.branches[self.branch_index(x)];
        b.law.eval(x).max(self.domain.lo).min(self.domain.hi)
    }

    /// `Df(x)`. At a shared branch endpoint where `f` jumps or the one-sided
    /// derivatives disagree the value is ambiguous and an error is returned.
    pub fn deriv(&self, x: T) -> Result<T> {
        self.check_domain(x)?;
        let i = self.branch_index(x);
        let d = self.branches[i].deriv(x);
        if i + 1 < self.branches.len() && self.branches[i].interval.hi == x {
            let right = &self.branches[i + 1];
            if right.deriv(x) != d || right.eval(x) != self.branches[i].eval(x) {
                return Err(Error::BranchBoundary { x: x.as_f64() });
            }
        }
        Ok(d)
    }

    /// `Df(x)` with the left tie-break applied silently (orbit loops).
    #[inline]
    pub fn deriv_left(&self, x: T) -> T {
        self.branches[self.branch_index(x)].deriv(x)
    }

    /// Image of `interval` under `f^n` following a fixed itinerary, using the
    /// branch laws (so boundary points are mapped consistently with the word).
    pub fn image_along(&self, word: &[Symbol], interval: &Interval<T>) -> Interval<T> {
        word.iter().fold(*interval, |acc, &s| self.branches[s as usize].image_of(&acc))
    }

    /// Forward orbit point along a fixed itinerary.
    pub fn eval_along(&self, word: &[Symbol], x: T) -> T {
        word.iter().fold(x, |acc, &s| self.branches[s as usize].eval(acc))
    }

    /// `|D f^n(x)|` along a fixed itinerary, returned as its logarithm.
    pub fn log_abs_deriv_along(&self, word: &[Symbol], x: T) -> f64 {
        let mut y = x;
        let mut acc = 0.0;
        for &s in word {
            let b = &self.branches[s as usize];
            acc += b.deriv(y).abs().as_f64().ln();
            y = b.eval(y);
        }
        acc
    }

    /// Points of `target` whose orbit follows `word`: the inverse image under
    /// the composed branch. `None` if empty.
    pub fn pullback_along(&self, word: &[Symbol], target: &Interval<T>) -> Option<Interval<T>> {
        let mut cur = *target;
        for &s in word.iter().rev() {
            cur = self.branches[s as usize].pullback(&cur)?;
        }
        Some(cur)
    }

    /// Inverse of a single point along a word (the point must lie in the
    /// image of the composed branch).
    pub fn inverse_along(&self, word: &[Symbol], y: T) -> T {
        word.iter().rev().fold(y, |acc, &s| self.branches[s as usize].inverse(acc))
    }

    /// Checks the structural invariants of the map.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedMap(m));
        if !(self.domain.lo < self.domain.hi) {
            return bad(format!("degenerate domain {}", self.domain));
        }
        let Some(first) = self.branches.first() else {
            return bad("no branches".into());
        };
        if first.interval.lo != self.domain.lo || self.branches.last().unwrap().interval.hi != self.domain.hi {
            return bad("branches do not cover the domain".into());
        }
        for w in self.branches.windows(2) {
            if w[0].interval.hi != w[1].interval.lo {
                return bad(format!("gap or overlap between {} and {}", w[0].interval, w[1].interval));
            }
        }
        let tol = T::lit(1e-9) * self.domain.width();
        for (i, b) in self.branches.iter().enumerate() {
            if !(b.interval.lo < b.interval.hi) {
                return bad(format!("branch {i} is degenerate"));
            }
            // sampled strict monotonicity in the declared direction
            let k = 64;
            let mut prev = b.eval(b.interval.lo);
            for j in 1..=k {
                let x = b.interval.lo + b.interval.width() * T::lit(j as f64 / k as f64);
                let y = b.eval(x);
                let ok = match b.direction {
                    Direction::Increasing => y > prev,
                    Direction::Decreasing => y < prev,
                };
                if !ok {
                    return bad(format!("branch {i} is not strictly monotone near {x}"));
                }
                prev = y;
            }
            let img = b.image();
            if img.lo < self.domain.lo - tol || img.hi > self.domain.hi + tol {
                return bad(format!("branch {i} image {img} leaves the domain"));
            }
        }
        for c in &self.critical_points {
            if c.kind == CriticalKind::Smooth {
                let d = self.branches[self.branch_index(c.location)].deriv(c.location);
                if d.abs() > T::lit(1e-9) {
                    return bad(format!("critical point {} has Df = {}", c.location, d));
                }
                if !(c.order > T::one()) {
                    return bad(format!("critical point {} has order {} <= 1", c.location, c.order));
                }
            }
        }
        Ok(())
    }

    /// Converts the map to another scalar type.
    pub fn cast<U: Real>(&self) -> IntervalMap<U> {
        let cv = |v: T| U::lit(v.as_f64());
        let law = |l: &BranchLaw<T>| match *l {
            BranchLaw::Affine { slope, intercept } => BranchLaw::Affine { slope: cv(slope), intercept: cv(intercept) },
            BranchLaw::Quadratic { a } => BranchLaw::Quadratic { a: cv(a) },
            BranchLaw::Cubic { b } => BranchLaw::Cubic { b: cv(b) },
        };
        IntervalMap {
            domain: self.domain.cast(),
            branches: self
                .branches
                .iter()
                .map(|b| Branch { interval: b.interval.cast(), direction: b.direction, law: law(&b.law) })
                .collect(),
            critical_points: self
                .critical_points
                .iter()
                .map(|c| CriticalPoint { location: cv(c.location), order: cv(c.order), kind: c.kind })
                .collect(),
            family: self.family.clone(),
            density: self.density,
        }
    }
}

impl<T: Real> fmt::Display for IntervalMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.family, self.domain)
    }
}

/// Interior roots of `Df` on `domain`: sign changes on a mesh refined by
/// bisection, plus exact mesh zeros.
fn critical_roots<T: Real>(law: &BranchLaw<T>, domain: &Interval<T>) -> Vec<T> {
    const MESH: usize = 4096;
    let at = |j: usize| domain.lo + domain.width() * T::lit(j as f64 / MESH as f64);
    let mut roots = Vec::new();
    for j in 0..MESH {
        let (a, b) = (at(j), at(j + 1));
        let (da, db) = (law.deriv(a), law.deriv(b));
        if j > 0 && da == T::zero() {
            roots.push(a);
            continue;
        }
        if da * db < T::zero() {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = lo + (hi - lo) * T::lit(0.5);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (law.deriv(mid) < T::zero()) == (da < T::zero()) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(if law.deriv(lo).abs() <= law.deriv(hi).abs() { lo } else { hi });
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert!((IntervalMap::<f64>::doubling().eval(0.3).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(IntervalMap::<f64>::tent(2.0).unwrap().eval(0.75).unwrap(), 0.5);
        assert_eq!(IntervalMap::<f64>::logistic(4.0).unwrap().eval(0.5).unwrap(), 1.0);
    }

    #[test]
    fn eval_outside_domain_is_an_error() {
        let m = IntervalMap::<f64>::doubling();
        assert!(matches!(m.eval(1.5), Err(Error::OutsideDomain { .. })));
        assert!(matches!(m.eval(-1e-9), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn deriv_examples() {
        let d = IntervalMap::<f64>::doubling();
        for x in [0.1, 0.3, 0.7, 0.99] {
            assert_eq!(d.deriv(x).unwrap().abs(), 2.0);
        }
        let l = IntervalMap::<f64>::logistic(4.0).unwrap();
        assert_eq!(l.deriv(0.5).unwrap(), 0.0);
        assert_eq!(l.deriv(0.25).unwrap(), 2.0);
    }

    #[test]
    fn deriv_at_discontinuity_is_ambiguous() {
        let d = IntervalMap::<f64>::doubling();
        assert!(matches!(d.deriv(0.5), Err(Error::BranchBoundary { .. })));
        let t = IntervalMap::<f64>::tent(2.0).unwrap();
        assert!(matches!(t.deriv(0.5), Err(Error::BranchBoundary { .. })));
    }

    #[test]
    fn left_tie_break() {
        let d = IntervalMap::<f64>::doubling();
        assert_eq!(d.branch_index(0.5), 0);
        assert_eq!(d.apply(0.5), 1.0);
        assert!(d.is_branch_boundary(0.5));
        assert!(!d.is_branch_boundary(0.0));
    }

    #[test]
    fn inverses_roundtrip() {
        let maps: Vec<IntervalMap<f64>> = vec![
            IntervalMap::doubling(),
            IntervalMap::tent(2f64.sqrt()).unwrap(),
            IntervalMap::logistic(3.8).unwrap(),
            IntervalMap::skew_linear(&[0.2, 0.5, 0.3]).unwrap(),
            IntervalMap::cubic(4.0).unwrap(),
        ];
        for m in &maps {
            for b in m.branches() {
                for k in 1..20 {
                    let x = b.interval.lo + b.interval.width() * (k as f64 / 20.0);
                    let back = b.inverse(b.eval(x));
                    assert!((back - x).abs() < 1e-9, "{m}: {x} -> {back}");
                }
            }
        }
    }

    #[test]
    fn malformed_maps_are_rejected() {
        let dom = Interval::new(0.0, 1.0);
        let gap = vec![
            Branch { interval: Interval::new(0.0, 0.4), direction: Direction::Increasing, law: BranchLaw::Affine { slope: 2.0, intercept: 0.0 } },
            Branch { interval: Interval::new(0.5, 1.0), direction: Direction::Increasing, law: BranchLaw::Affine { slope: 2.0, intercept: -1.0 } },
        ];
        assert!(IntervalMap::from_branches(dom, gap, vec![], Family::Custom("gap".into())).is_err());
        let wrong_dir = vec![Branch {
            interval: dom,
            direction: Direction::Decreasing,
            law: BranchLaw::Affine { slope: 1.0, intercept: 0.0 },
        }];
        assert!(IntervalMap::from_branches(dom, wrong_dir, vec![], Family::Custom("dir".into())).is_err());
    }

    #[test]
    fn cubic_critical_points_are_root_found() {
        let m = IntervalMap::<f64>::cubic(4.0).unwrap();
        let c: Vec<f64> = m.critical_points().iter().map(|c| c.location).collect();
        assert_eq!(c.len(), 2);
        // Df = 12x^2 - 3 vanishes at ±1/2
        assert!((c[0] + 0.5).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12, "{c:?}");
        assert_eq!(m.branches().len(), 3);
        assert_eq!(m.branches()[1].direction, Direction::Decreasing);
    }

    #[test]
    fn single_precision_map() {
        let t = IntervalMap::<f32>::tent(2.0).unwrap();
        assert_eq!(t.eval(0.75f32).unwrap(), 0.5f32);
        let d64 = IntervalMap::<f64>::logistic(4.0).unwrap();
        let d32: IntervalMap<f32> = d64.cast();
        assert!((d32.apply(0.3f32) - 0.84f32).abs() < 1e-6);
    }
}
