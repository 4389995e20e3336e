use std::f64::consts::PI;

use crate::interval::Interval;

/// Closed-form invariant densities registered for gallery maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticDensity {
    /// Normalised Lebesgue measure on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `1 / (π √((x - lo)(hi - x)))` on `[lo, hi]`.
    Arcsine { lo: f64, hi: f64 },
}

impl AnalyticDensity {
    pub fn support(&self) -> Interval<f64> {
        match *self {
            AnalyticDensity::Uniform { lo, hi } | AnalyticDensity::Arcsine { lo, hi } => Interval::new(lo, hi),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s = self.support();
        if !s.contains(x) {
            return 0.0;
        }
        match *self {
            AnalyticDensity::Uniform { lo, hi } => 1.0 / (hi - lo),
            AnalyticDensity::Arcsine { lo, hi } => 1.0 / (PI * ((x - lo) * (hi - x)).sqrt()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = self.support();
        if x <= s.lo {
            return 0.0;
        }
        if x >= s.hi {
            return 1.0;
        }
        match *self {
            AnalyticDensity::Uniform { lo, hi } => (x - lo) / (hi - lo),
            AnalyticDensity::Arcsine { lo, hi } => 2.0 / PI * ((x - lo) / (hi - lo)).sqrt().asin(),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match *self {
            AnalyticDensity::Uniform { lo, hi } => lo + (hi - lo) * u,
            AnalyticDensity::Arcsine { lo, hi } => lo + (hi - lo) * (0.5 * PI * u).sin().powi(2),
        }
    }

    /// `μ(I)`. Tiny intervals use a midpoint rule to avoid cancellation in
    /// the CDF difference; relative accuracy stays near machine precision.
    pub fn measure(&self, i: &Interval<f64>) -> f64 {
        let Some(i) = i.intersect(&self.support()) else {
            return 0.0;
        };
        if let AnalyticDensity::Uniform { lo, hi } = *self {
            return i.width() / (hi - lo);
        }
        let w = i.width();
        let s = self.support();
        let mid = i.midpoint();
        // away from the singular endpoints and narrow enough for the
        // three-point rule to beat the CDF difference
        if w < 1e-6 * s.width() && s.depth(mid) > 1e3 * w {
            let h = 0.5 * w;
            let g = (0.6f64).sqrt() * h;
            return h * (5.0 * self.pdf(mid - g) + 8.0 * self.pdf(mid) + 5.0 * self.pdf(mid + g)) / 9.0;
        }
        self.cdf(i.hi) - self.cdf(i.lo)
    }
}
