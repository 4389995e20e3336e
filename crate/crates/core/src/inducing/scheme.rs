use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::maps::{IntervalMap, Symbol};
use crate::real::Real;

use super::ScaledNeighbourhood;

/// Which returns to `Y` count as returns of the scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extension<T> {
    /// First δ-extendible returns: the branch image must cover `Y'`.
    Scaled(ScaledNeighbourhood<T>),
    /// Plain first returns to `Y`; for sets with no scaled neighbourhood
    /// inside the domain, such as `[0, 1/2]` for the doubling map.
    FirstReturn(Interval<T>),
}

impl<T: Real> Extension<T> {
    pub fn base(&self) -> Interval<T> {
        match self {
            Extension::Scaled(n) => n.y,
            Extension::FirstReturn(y) => *y,
        }
    }

    fn accepts(&self, image: &Interval<T>) -> bool {
        match self {
            Extension::Scaled(n) => image.contains_interval(&n.y_prime),
            Extension::FirstReturn(_) => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeOptions {
    /// Largest inducing time explored.
    pub depth: usize,
    /// Uncovered mass (relative to `μ(Y)`) above which the scheme carries a
    /// warning.
    pub uncovered_threshold: f64,
    /// Cap on simultaneously explored pieces.
    pub max_nodes: usize,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions { depth: 30, uncovered_threshold: 1e-3, max_nodes: 4_000_000 }
    }
}

/// `Y_i` with inducing time `τ_i = |word|`.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedBranch<T> {
    pub interval: Interval<T>,
    pub tau: usize,
    /// Itinerary of `Y_i` under `f^{τ_i}`.
    pub word: Vec<Symbol>,
    /// `F(Y_i)` covers `Y` up to rounding.
    pub onto: bool,
}

#[derive(Clone, Debug)]
pub struct InducingScheme<T> {
    pub extension: Extension<T>,
    /// Branches ordered left to right.
    pub branches: Vec<InducedBranch<T>>,
    pub depth: usize,
    /// `μ(Y \ ∪ Y_i) / μ(Y)`, with `μ` the registered density or Lebesgue.
    pub uncovered: f64,
    pub warning: Option<String>,
}

struct Node<T> {
    word: Vec<Symbol>,
    /// `f^i` of the piece of `Y` being followed.
    image: Interval<T>,
    /// `f^i` of its cylinder.
    hull: Interval<T>,
}

/// Partitions `Y` into the branches of the first (δ-extendible) return map
/// with inducing times up to `depth`, by following the images of `Y` and
/// splitting them at branch boundaries and at `∂Y`.
pub fn build_inducing_scheme<T: Real>(
    map: &IntervalMap<T>,
    extension: Extension<T>,
    opts: SchemeOptions,
) -> Result<InducingScheme<T>> {
    if opts.depth < 1 {
        return Err(invalid("depth", "must be at least 1"));
    }
    let y = extension.base();
    let dom = map.domain();
    if !dom.contains_interval(&y) || !(y.width() > T::zero()) {
        return Err(invalid("Y", format!("{y} must be a nondegenerate subinterval of {dom}")));
    }
    if y.approx_eq(&dom, T::zero()) && matches!(extension, Extension::Scaled(_)) {
        return Err(invalid("Y", "the scaled neighbourhood of the whole domain cannot lie in the domain"));
    }
    let resolution = T::epsilon() * T::lit(64.0) * dom.width();
    let onto_tol = T::lit(1e-9) * y.width();
    let mut branches = Vec::new();
    let mut nodes = vec![Node { word: vec![], image: y, hull: dom }];
    let mut depth_reached = 0;
    let mut capped = false;
    for step in 1..=opts.depth {
        if nodes.is_empty() {
            break;
        }
        depth_reached = step;
        let mut next = Vec::new();
        for node in nodes {
            for (b, br) in map.branches().iter().enumerate() {
                let Some(piece) = node.image.intersect_open(&br.interval) else { continue };
                let hull_piece = node.hull.intersect(&br.interval).unwrap_or(piece);
                let image = clip(br.image_of(&piece), &dom);
                let hull = clip(br.image_of(&hull_piece), &dom);
                let mut word = node.word.clone();
                word.push(b as Symbol);
                let inside = image.intersect_open(&y);
                let below = Interval { lo: image.lo, hi: image.hi.min(y.lo) };
                let above = Interval { lo: image.lo.max(y.hi), hi: image.hi };
                if let Some(hit) = inside {
                    if extension.accepts(&hull) {
                        let pre = map.pullback_along(&word, &hit).and_then(|p| p.intersect(&y));
                        if let Some(pre) = pre.filter(|p| p.width() > resolution) {
                            let onto = hit.approx_eq(&y, onto_tol);
                            branches.push(InducedBranch { interval: pre, tau: step, word: word.clone(), onto });
                        }
                    } else {
                        next.push(Node { word: word.clone(), image: hit, hull });
                    }
                }
                for part in [below, above] {
                    if part.lo < part.hi {
                        next.push(Node { word: word.clone(), image: part, hull });
                    }
                }
            }
        }
        // discard pieces too thin to resolve; they stay uncovered
        next.retain(|n| {
            map.pullback_along(&n.word, &n.image).is_some_and(|p| p.width() > resolution)
        });
        if next.len() > opts.max_nodes {
            capped = true;
            break;
        }
        nodes = next;
    }
    branches.sort_by(|a, b| a.interval.lo.partial_cmp(&b.interval.lo).unwrap());
    let measure = |i: &Interval<T>| -> f64 {
        match map.density() {
            Some(d) => d.measure(&i.to_f64()),
            None => i.width().as_f64(),
        }
    };
    let covered: f64 = branches.iter().map(|b| measure(&b.interval)).sum();
    let uncovered = (1.0 - covered / measure(&y)).max(0.0);
    let mut warning = None;
    if uncovered > opts.uncovered_threshold {
        warning = Some(format!(
            "uncovered mass {uncovered:.3e} exceeds {:.1e} at depth {depth_reached}",
            opts.uncovered_threshold
        ));
    }
    if capped {
        let msg = format!("exploration stopped at {} live pieces", opts.max_nodes);
        warning = Some(match warning {
            Some(w) => format!("{w}; {msg}"),
            None => msg,
        });
    }
    let not_onto = branches.iter().filter(|b| !b.onto).count();
    if not_onto > 0 {
        let msg = format!("{not_onto} branches do not map onto Y");
        warning = Some(match warning {
            Some(w) => format!("{w}; {msg}"),
            None => msg,
        });
    }
    Ok(InducingScheme { extension, branches, depth: opts.depth, uncovered, warning })
}

fn clip<T: Real>(i: Interval<T>, dom: &Interval<T>) -> Interval<T> {
    Interval::new(i.lo.max(dom.lo), i.hi.min(dom.hi))
}

impl<T: Real> InducingScheme<T> {
    pub fn base(&self) -> Interval<T> {
        self.extension.base()
    }

    /// Index of the branch containing `x`.
    pub fn branch_of(&self, x: T) -> Option<usize> {
        let i = self.branches.partition_point(|b| b.interval.hi < x);
        (i < self.branches.len() && self.branches[i].interval.contains(x)).then_some(i)
    }

    /// Writes `branch_index,left,right,tau`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "branch_index,left,right,tau")?;
        for (i, b) in self.branches.iter().enumerate() {
            writeln!(w, "{i},{},{},{}", b.interval.lo, b.interval.hi, b.tau)?;
        }
        Ok(())
    }
}

/// `μ(A) = (1/Λ) Σ_i Σ_{k<τ_i} μ_F(f^{-k}(A) ∩ Y_i)` with `μ_F` given by its
/// branch masses and spread proportionally to length within each branch.
pub fn project_induced_measure<T: Real>(
    map: &IntervalMap<T>,
    scheme: &InducingScheme<T>,
    weights: &[f64],
    a: &Interval<T>,
) -> Result<f64> {
    if weights.len() != scheme.branches.len() {
        return Err(invalid("weights", "need one weight per branch"));
    }
    let mu_f = |branch: usize, piece: &Interval<T>| {
        let b = &scheme.branches[branch].interval;
        weights[branch] * (piece.width() / b.width()).as_f64()
    };
    project_induced_measure_with(map, scheme, mu_f, a)
}

/// As [`project_induced_measure`] with `μ_F(S ∩ Y_i)` supplied by the caller
/// as `mu_f(i, S ∩ Y_i)`.
pub fn project_induced_measure_with<T: Real>(
    map: &IntervalMap<T>,
    scheme: &InducingScheme<T>,
    mu_f: impl Fn(usize, &Interval<T>) -> f64,
    a: &Interval<T>,
) -> Result<f64> {
    let mut lambda = 0.0;
    let mut total = 0.0;
    for (i, br) in scheme.branches.iter().enumerate() {
        let w = mu_f(i, &br.interval);
        if w < 0.0 {
            return Err(invalid("weights", "must be nonnegative"));
        }
        lambda += br.tau as f64 * w;
        for k in 0..br.tau {
            let prefix = &br.word[..k];
            let image = map.image_along(prefix, &br.interval);
            let Some(hit) = image.intersect(a) else { continue };
            let pre = if k == 0 {
                Some(hit)
            } else if hit.lo == hit.hi {
                None
            } else {
                map.pullback_along(prefix, &hit).and_then(|p| p.intersect(&br.interval))
            };
            if let Some(pre) = pre {
                total += mu_f(i, &pre);
            }
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::ZeroNormalisation);
    }
    Ok(total / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubling_scheme(depth: usize) -> (IntervalMap<f64>, InducingScheme<f64>) {
        let d = IntervalMap::<f64>::doubling();
        let y = Interval::new(0.0, 0.5);
        let s = build_inducing_scheme(&d, Extension::FirstReturn(y), SchemeOptions { depth, ..Default::default() })
            .unwrap();
        (d, s)
    }

    #[test]
    fn doubling_half_has_dyadic_branches() {
        let (_, s) = doubling_scheme(20);
        assert_eq!(s.branches.len(), 20);
        for (i, b) in s.branches.iter().enumerate() {
            let tau = i + 1;
            assert_eq!(b.tau, tau);
            // Y_1 = [0, 1/4], Y_i = [1/2 - 2^-i, 1/2 - 2^-(i+1)]
            let (lo, hi) = if tau == 1 { (0.0, 0.25) } else { (0.5 - 0.5f64.powi(tau as i32), 0.5 - 0.5f64.powi(tau as i32 + 1)) };
            assert!((b.interval.lo - lo).abs() < 1e-15 && (b.interval.hi - hi).abs() < 1e-15, "{tau}: {}", b.interval);
            assert!(b.onto);
        }
        assert!((s.uncovered - 0.5f64.powi(20)).abs() < 1e-15);
        assert!(s.warning.is_none());
        let (_, shallow) = doubling_scheme(5);
        assert!(shallow.warning.is_some());
    }

    #[test]
    fn whole_domain_is_rejected_for_scaled_schemes() {
        let t = IntervalMap::<f64>::tent(2.0).unwrap();
        assert!(ScaledNeighbourhood::new(t.domain(), 1e-9, t.domain()).is_err());
    }

    #[test]
    fn trivial_scheme_projects_to_itself() {
        // Y = I with every point returning at time one
        let t = IntervalMap::<f64>::tent(2.0).unwrap();
        let s = build_inducing_scheme(&t, Extension::FirstReturn(t.domain()), SchemeOptions::default()).unwrap();
        assert_eq!(s.branches.len(), 2);
        assert!(s.branches.iter().all(|b| b.tau == 1));
        let w: Vec<f64> = s.branches.iter().map(|b| b.interval.width()).collect();
        let a = Interval::new(0.1, 0.35);
        let mu = project_induced_measure(&t, &s, &w, &a).unwrap();
        assert!((mu - 0.25).abs() < 1e-14);
    }

    #[test]
    fn dyadic_reconstruction() {
        let (d, s) = doubling_scheme(30);
        let w: Vec<f64> = s.branches.iter().map(|b| b.interval.width() / 0.5).collect();
        assert!((project_induced_measure(&d, &s, &w, &d.domain()).unwrap() - 1.0).abs() < 1e-12);
        for (lo, hi) in [(0.0, 0.5), (0.25, 0.5), (0.625, 0.75), (0.875, 1.0), (0.5, 0.5625)] {
            let mu = project_induced_measure(&d, &s, &w, &Interval::new(lo, hi)).unwrap();
            assert!((mu - (hi - lo)).abs() < 1e-3, "[{lo}, {hi}] -> {mu}");
        }
    }

    #[test]
    fn zero_weights_are_rejected() {
        let (d, s) = doubling_scheme(5);
        let w = vec![0.0; s.branches.len()];
        assert!(matches!(project_induced_measure(&d, &s, &w, &d.domain()), Err(Error::ZeroNormalisation)));
    }

    #[test]
    fn csv_export() {
        let (_, s) = doubling_scheme(3);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("branch_index,left,right,tau\n0,0,0.25,1\n"));
    }
}
