use std::fmt;

use crate::real::Real;

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    /// Builds the interval spanned by two points in either order.
    pub fn new(a: T, b: T) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn unit() -> Self {
        Interval { lo: T::zero(), hi: T::one() }
    }

    #[inline]
    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    #[inline]
    pub fn midpoint(&self) -> T {
        self.lo + (self.hi - self.lo) * T::lit(0.5)
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_interior(&self, x: T) -> bool {
        self.lo < x && x < self.hi
    }

    /// `other ⊆ self`.
    #[inline]
    pub fn contains_interval(&self, other: &Interval<T>) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Closed intersection, `None` when disjoint.
    pub fn intersect(&self, other: &Interval<T>) -> Option<Interval<T>> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    /// Intersection with nonempty interior.
    pub fn intersect_open(&self, other: &Interval<T>) -> Option<Interval<T>> {
        self.intersect(other).filter(|i| i.lo < i.hi)
    }

    pub fn hull(&self, other: &Interval<T>) -> Interval<T> {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Endpoint-wise comparison with an absolute tolerance.
    pub fn approx_eq(&self, other: &Interval<T>, tol: T) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }

    /// Distance from `x` to the nearer endpoint (negative outside).
    pub fn depth(&self, x: T) -> T {
        (x - self.lo).min(self.hi - x)
    }

    pub fn to_f64(&self) -> Interval<f64> {
        Interval { lo: self.lo.as_f64(), hi: self.hi.as_f64() }
    }

    pub fn cast<U: Real>(&self) -> Interval<U> {
        Interval { lo: U::lit(self.lo.as_f64()), hi: U::lit(self.hi.as_f64()) }
    }
}

impl<T: Real> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_orders_endpoints() {
        let i = Interval::new(0.7_f64, 0.2);
        assert_eq!(i.lo, 0.2);
        assert_eq!(i.hi, 0.7);
        assert!((i.width() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intersections() {
        let a = Interval::new(0.0, 0.5);
        let b = Interval::new(0.5, 1.0);
        assert_eq!(a.intersect(&b), Some(Interval::new(0.5, 0.5)));
        assert_eq!(a.intersect_open(&b), None);
        assert!(Interval::new(0.0_f64, 1.0).contains_interval(&a));
    }
}
