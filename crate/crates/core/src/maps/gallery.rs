use std::fmt;

use crate::error::{invalid, Result};
use crate::interval::Interval;
use crate::real::Real;

use super::{AnalyticDensity, Branch, BranchLaw, CriticalKind, CriticalPoint, Direction, IntervalMap};

/// Identifier of a map family with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Doubling,
    Tent { s: f64 },
    Logistic { a: f64 },
    SkewLinear { widths: Vec<f64> },
    Cubic { b: f64 },
    Custom(String),
}

impl Family {
    /// Lyapunov exponent of the acip when it is known in closed form.
    pub fn known_lyapunov(&self) -> Option<f64> {
        match self {
            Family::Doubling => Some(2f64.ln()),
            Family::Tent { s } => Some(s.ln()),
            Family::Logistic { a } if *a == 4.0 => Some(2f64.ln()),
            Family::SkewLinear { widths } => Some(bernoulli_entropy(widths)),
            Family::Cubic { b } if *b == 4.0 => Some(3f64.ln()),
            _ => None,
        }
    }

    /// Metric entropy of the acip when known (equals the Lyapunov exponent
    /// for acips by Pesin's formula).
    pub fn known_entropy(&self) -> Option<f64> {
        self.known_lyapunov()
    }

    /// `∫ (log|Df|)^2 dμ` for the acip when known in closed form.
    pub fn known_log_deriv_second_moment(&self) -> Option<f64> {
        let l2 = 2f64.ln();
        match self {
            Family::Doubling => Some(l2 * l2),
            Family::Tent { s } if *s == 2.0 => Some(l2 * l2),
            Family::SkewLinear { widths } => Some(widths.iter().map(|w| w * w.ln() * w.ln()).sum()),
            // log|4 - 8x| = log 4 + log|cos πθ| under x = sin²(πθ/2)
            Family::Logistic { a } if *a == 4.0 => Some(l2 * l2 + std::f64::consts::PI.powi(2) / 12.0),
            _ => None,
        }
    }
}

fn bernoulli_entropy(widths: &[f64]) -> f64 {
    -widths.iter().map(|w| w * w.ln()).sum::<f64>()
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Doubling => write!(f, "doubling"),
            Family::Tent { s } => write!(f, "tent({s})"),
            Family::Logistic { a } => write!(f, "logistic({a})"),
            Family::SkewLinear { widths } => {
                let w: Vec<String> = widths.iter().map(|w| w.to_string()).collect();
                write!(f, "skewlinear({})", w.join(","))
            }
            Family::Cubic { b } => write!(f, "cubic({b})"),
            Family::Custom(name) => write!(f, "{name}"),
        }
    }
}

impl<T: Real> IntervalMap<T> {
    /// `x ↦ 2x mod 1` as a two-branch map on `[0, 1]` (the right branch
    /// sends 1 to 1).
    pub fn doubling() -> Self {
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let branches = vec![
            Branch {
                interval: Interval::new(T::zero(), half),
                direction: Direction::Increasing,
                law: BranchLaw::Affine { slope: two, intercept: T::zero() },
            },
            Branch {
                interval: Interval::new(half, T::one()),
                direction: Direction::Increasing,
                law: BranchLaw::Affine { slope: two, intercept: -T::one() },
            },
        ];
        IntervalMap::from_branches(Interval::unit(), branches, vec![], Family::Doubling)
            .expect("doubling map is well formed")
            .with_density(AnalyticDensity::Uniform { lo: 0.0, hi: 1.0 })
    }

    /// Symmetric tent map `x ↦ s·min(x, 1 - x)`, `s ∈ (1, 2]`.
    pub fn tent(s: f64) -> Result<Self> {
        if !(s > 1.0 && s <= 2.0) {
            return Err(invalid("s", format!("tent slope must lie in (1, 2], got {s}")));
        }
        let sv = T::lit(s);
        let half = T::lit(0.5);
        let branches = vec![
            Branch {
                interval: Interval::new(T::zero(), half),
                direction: Direction::Increasing,
                law: BranchLaw::Affine { slope: sv, intercept: T::zero() },
            },
            Branch {
                interval: Interval::new(half, T::one()),
                direction: Direction::Decreasing,
                law: BranchLaw::Affine { slope: -sv, intercept: sv },
            },
        ];
        let fold = CriticalPoint { location: half, order: T::one(), kind: CriticalKind::Fold };
        let map = IntervalMap::from_branches(Interval::unit(), branches, vec![fold], Family::Tent { s })?;
        Ok(if s == 2.0 { map.with_density(AnalyticDensity::Uniform { lo: 0.0, hi: 1.0 }) } else { map })
    }

    /// Logistic map `x ↦ a x (1 - x)`, `a ∈ (2, 4]`.
    pub fn logistic(a: f64) -> Result<Self> {
        if !(a > 2.0 && a <= 4.0) {
            return Err(invalid("a", format!("logistic parameter must lie in (2, 4], got {a}")));
        }
        let map = IntervalMap::from_smooth_law(Interval::unit(), BranchLaw::Quadratic { a: T::lit(a) }, Family::Logistic { a })?;
        Ok(if a == 4.0 { map.with_density(AnalyticDensity::Arcsine { lo: 0.0, hi: 1.0 }) } else { map })
    }

    /// Full-branch piecewise-linear map on `[0, 1]`: branch `i` has width
    /// `w_i` and maps increasingly onto `[0, 1]` with slope `1/w_i`.
    /// Lebesgue measure is invariant.
    pub fn skew_linear(widths: &[f64]) -> Result<Self> {
        if widths.len() < 2 {
            return Err(invalid("w", "need at least two branch widths"));
        }
        if widths.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("w", "branch widths must be positive"));
        }
        let total: f64 = widths.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("w", format!("branch widths must sum to 1, got {total}")));
        }
        let mut edges = Vec::with_capacity(widths.len() + 1);
        let mut acc = 0.0;
        edges.push(0.0);
        for w in &widths[..widths.len() - 1] {
            acc += w;
            edges.push(acc);
        }
        edges.push(1.0);
        let branches = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| Branch {
                interval: Interval::new(T::lit(edges[i]), T::lit(edges[i + 1])),
                direction: Direction::Increasing,
                law: BranchLaw::Affine { slope: T::lit(1.0 / w), intercept: T::lit(-edges[i] / w) },
            })
            .collect();
        Ok(IntervalMap::from_branches(Interval::unit(), branches, vec![], Family::SkewLinear { widths: widths.to_vec() })?
            .with_density(AnalyticDensity::Uniform { lo: 0.0, hi: 1.0 }))
    }

    /// Odd cubic `x ↦ b x^3 + (1 - b) x` on `[-1, 1]`, `b ∈ (1, 4]`; two
    /// interior critical points found by root-finding. `b = 4` is the
    /// Chebyshev polynomial `4x^3 - 3x`.
    pub fn cubic(b: f64) -> Result<Self> {
        if !(b > 1.0 && b <= 4.0) {
            return Err(invalid("b", format!("cubic parameter must lie in (1, 4], got {b}")));
        }
        let map = IntervalMap::from_smooth_law(
            Interval::new(-T::one(), T::one()),
            BranchLaw::Cubic { b: T::lit(b) },
            Family::Cubic { b },
        )?;
        Ok(if b == 4.0 { map.with_density(AnalyticDensity::Arcsine { lo: -1.0, hi: 1.0 }) } else { map })
    }
}

/// Names and oracles of the built-in families, for listings.
pub fn gallery_listing() -> Vec<(String, String)> {
    vec![
        ("doubling".into(), "acip = Lebesgue; h = λ = log 2; ∫(log|Df|)² = (log 2)²".into()),
        ("tent(s), s ∈ (1,2]".into(), "λ = log s; acip = Lebesgue when s = 2".into()),
        ("logistic(a), a ∈ (2,4]".into(), "a = 4: acip density 1/(π√(x(1-x))), λ = log 2, ∫(log|Df|)² = (log 2)² + π²/12".into()),
        ("skewlinear(w_1..w_k)".into(), "acip = Lebesgue; h = λ = -Σ w log w".into()),
        ("cubic(b), b ∈ (1,4]".into(), "b = 4: acip density 1/(π√(1-x²)) on [-1,1], λ = log 3".into()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_ranges() {
        assert!(IntervalMap::<f64>::tent(1.0).is_err());
        assert!(IntervalMap::<f64>::tent(2.5).is_err());
        assert!(IntervalMap::<f64>::logistic(1.5).is_err());
        assert!(IntervalMap::<f64>::skew_linear(&[0.5, 0.6]).is_err());
        assert!(IntervalMap::<f64>::skew_linear(&[1.0]).is_err());
        assert!(IntervalMap::<f64>::cubic(0.5).is_err());
    }

    #[test]
    fn skewlinear_entropy_oracle() {
        let f = Family::SkewLinear { widths: vec![1.0 / 3.0, 2.0 / 3.0] };
        assert!((f.known_entropy().unwrap() - 0.636514).abs() < 1e-6);
        assert!((f.known_log_deriv_second_moment().unwrap() - 0.511918).abs() < 1e-5);
    }

    #[test]
    fn display_tags() {
        assert_eq!(Family::Tent { s: 2.0 }.to_string(), "tent(2)");
        assert_eq!(Family::SkewLinear { widths: vec![0.25, 0.75] }.to_string(), "skewlinear(0.25,0.75)");
    }
}
