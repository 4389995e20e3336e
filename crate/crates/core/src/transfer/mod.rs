//! Transfer operators of full-branch expanding systems.
//!
//! A [`RychlikSystem`] is a base interval `Y` with branches `Y_i ⊂ Y`, each
//! mapped monotonically onto `Y` by `F = f^{τ_i}` along a fixed word, and a
//! potential `Φ = -δ log|DF| - s·τ` (`Φ = -∞` off the branches). The
//! operator `Lψ(x) = Σ_{F(y) = x} e^{Φ(y)} ψ(y)` is discretised by Ulam's
//! method on a uniform grid.

mod ulam;

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::inducing::{Extension, InducingScheme};
use crate::interval::Interval;
use crate::maps::{BranchLaw, IntervalMap, Symbol};

pub use ulam::{invariant_density, pressure_estimate, write_pressure_sweep, DensityEstimate, PowerOptions, PressureEstimate, UlamOperator};

/// Default number of Ulam bins.
pub const DEFAULT_BINS: usize = 4096;

/// `Φ = -δ log|DF| - shift·τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential {
    pub delta: f64,
    pub shift: f64,
}

impl Potential {
    /// `-log|DF|`, the log-Jacobian of Lebesgue measure.
    pub fn geometric() -> Self {
        Potential { delta: 1.0, shift: 0.0 }
    }

    pub fn scaled(delta: f64) -> Self {
        Potential { delta, shift: 0.0 }
    }

    #[inline]
    pub fn eval(&self, log_abs_df: f64, tau: usize) -> f64 {
        -self.delta * log_abs_df - self.shift * tau as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RychlikBranch {
    /// `Y_i`
    pub interval: Interval<f64>,
    pub word: Vec<Symbol>,
    /// `Z_i ⊋ Y_i` on which the branch extends to a homeomorphism onto a
    /// neighbourhood of `Y`, when one was found.
    pub extension: Option<Interval<f64>>,
}

impl RychlikBranch {
    pub fn tau(&self) -> usize {
        self.word.len()
    }
}

#[derive(Clone, Debug)]
pub struct RychlikSystem {
    map: IntervalMap<f64>,
    base: Interval<f64>,
    branches: Vec<RychlikBranch>,
    potential: Potential,
    /// Lebesgue mass of `Y \ ∪ Y_i` relative to `|Y|` (truncated schemes).
    uncovered: f64,
    affine: bool,
}

impl RychlikSystem {
    /// The branches of `P_1` of a full-branch map, over `Y = I`.
    pub fn from_full_branch_map(map: &IntervalMap<f64>, potential: Potential) -> Result<Self> {
        let dom = map.domain();
        let tol = 1e-12 * dom.width();
        let mut branches = Vec::with_capacity(map.branches().len());
        for (i, b) in map.branches().iter().enumerate() {
            if !b.image().approx_eq(&dom, tol) {
                return Err(invalid("map", format!("branch {i} of {map} is not onto the domain")));
            }
            branches.push(RychlikBranch { interval: b.interval, word: vec![i as Symbol], extension: law_extension(map, i) });
        }
        Ok(Self::assemble(map, dom, branches, potential, 0.0))
    }

    /// The branches of an inducing scheme. Scaled schemes come with the
    /// extension to the pullback of `Y'`.
    pub fn from_scheme(map: &IntervalMap<f64>, scheme: &InducingScheme<f64>, potential: Potential) -> Result<Self> {
        let y = scheme.base();
        if scheme.branches.is_empty() {
            return Err(invalid("scheme", "has no branches"));
        }
        let branches = scheme
            .branches
            .iter()
            .map(|b| {
                let extension = match &scheme.extension {
                    Extension::Scaled(n) => map
                        .pullback_along(&b.word, &n.y_prime)
                        .filter(|z| map.image_along(&b.word, z).contains_interval(&n.y_prime)),
                    Extension::FirstReturn(_) => None,
                };
                RychlikBranch { interval: b.interval, word: b.word.clone(), extension }
            })
            .collect();
        let covered: f64 = scheme.branches.iter().map(|b| b.interval.width()).sum();
        let uncovered = (1.0 - covered / y.width()).max(0.0);
        Ok(Self::assemble(map, y, branches, potential, uncovered))
    }

    fn assemble(map: &IntervalMap<f64>, base: Interval<f64>, branches: Vec<RychlikBranch>, potential: Potential, uncovered: f64) -> Self {
        let affine = branches.iter().all(|b| b.word.iter().all(|&s| map.branch(s as usize).law.is_affine()));
        RychlikSystem { map: map.clone(), base, branches, potential, uncovered, affine }
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn base(&self) -> Interval<f64> {
        self.base
    }

    pub fn branches(&self) -> &[RychlikBranch] {
        &self.branches
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn map(&self) -> &IntervalMap<f64> {
        &self.map
    }

    pub fn uncovered(&self) -> f64 {
        self.uncovered
    }

    /// All branch laws are affine, so `|DF|` is constant per branch.
    pub fn is_affine(&self) -> bool {
        self.affine
    }

    /// `Φ(y)` on branch `i`.
    pub fn phi(&self, i: usize, y: f64) -> f64 {
        let b = &self.branches[i];
        self.potential.eval(self.map.log_abs_deriv_along(&b.word, y), b.tau())
    }

    /// `e^{Φ(y)}` on branch `i`. Affine words multiply the slopes directly,
    /// which keeps dyadic weights exact.
    pub fn weight(&self, i: usize, y: f64) -> f64 {
        let b = &self.branches[i];
        if self.affine {
            let df: f64 = b.word.iter().map(|&s| self.map.branch(s as usize).deriv(y).abs()).product();
            let shift = if self.potential.shift == 0.0 { 1.0 } else { (-self.potential.shift * b.tau() as f64).exp() };
            return df.powf(-self.potential.delta) * shift;
        }
        self.phi(i, y).exp()
    }

    /// `F_i^{-1}(x)`.
    pub fn inverse(&self, i: usize, x: f64) -> f64 {
        self.map.inverse_along(&self.branches[i].word, x)
    }

    /// Bound on the contribution of the branches missing from a truncated
    /// scheme: uncovered mass times `e^{sup Φ}`.
    pub fn truncation_remainder(&self) -> f64 {
        if self.uncovered == 0.0 {
            return 0.0;
        }
        let sup = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| self.phi(i, b.interval.midpoint()))
            .fold(f64::NEG_INFINITY, f64::max);
        self.uncovered * sup.exp().max(1.0)
    }
}

/// Extension of a single branch of `f` past its endpoints, possible when the
/// law stays monotone there (affine laws always; smooth laws up to the next
/// critical point).
fn law_extension(map: &IntervalMap<f64>, i: usize) -> Option<Interval<f64>> {
    let b = map.branch(i);
    let w = b.interval.width();
    match b.law {
        BranchLaw::Affine { .. } => Some(Interval::new(b.interval.lo - 0.1 * w, b.interval.hi + 0.1 * w)),
        _ => {
            let eps = 1e-3 * w;
            let z = Interval::new(b.interval.lo - eps, b.interval.hi + eps);
            let sign = b.law.deriv(b.interval.midpoint()).signum();
            let monotone = (0..=64).all(|k| b.law.deriv(z.lo + z.width() * k as f64 / 64.0) * sign > 0.0);
            monotone.then_some(z)
        }
    }
}

/// Uniform grid on an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Grid {
    pub fn new(interval: Interval<f64>, bins: usize) -> Self {
        Grid { lo: interval.lo, hi: interval.hi, bins: bins.max(1) }
    }

    #[inline]
    pub fn interval(&self) -> Interval<f64> {
        Interval::new(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    #[inline]
    pub fn edge(&self, j: usize) -> f64 {
        if j == self.bins {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * j as f64 / self.bins as f64
        }
    }

    pub fn bin(&self, j: usize) -> Interval<f64> {
        Interval::new(self.edge(j), self.edge(j + 1))
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.edge(j) + self.edge(j + 1))
    }

    #[inline]
    pub fn index(&self, x: f64) -> usize {
        let t = ((x - self.lo) / (self.hi - self.lo) * self.bins as f64).floor();
        (t.max(0.0) as usize).min(self.bins - 1)
    }
}

/// Piecewise-constant function on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.bins] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { grid, values: (0..grid.bins).map(|j| f(grid.center(j))).collect() }
    }

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.values[self.grid.index(x)]
    }

    /// `∫ ψ` over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.width()
    }

    pub fn l1_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.grid.width()
    }
}

/// `Lψ` evaluated at bin centres, with the truncation remainder bound.
pub fn transfer_apply(sys: &RychlikSystem, psi: &GridFunction) -> (GridFunction, f64) {
    let grid = psi.grid;
    let values = (0..grid.bins)
        .map(|j| {
            let x = grid.center(j);
            sys.branches
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let y = sys.inverse(i, x);
                    if !b.interval.contains(y) {
                        return 0.0;
                    }
                    sys.weight(i, y) * psi.at(y)
                })
                .sum()
        })
        .collect();
    let sup_psi = psi.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (GridFunction { grid, values }, sys.truncation_remainder() * sup_psi)
}

/// Outcome of [`check_rychlik`].
#[derive(Clone, Debug, PartialEq)]
pub struct RychlikReport {
    /// Every branch extends to a homeomorphism onto a neighbourhood of `Y`.
    pub extensions_ok: bool,
    /// `sup Φ` over the mesh and where it was attained `(branch, y)`.
    pub sup_phi: f64,
    pub sup_phi_at: (usize, f64),
    /// Mesh estimate of `Σ_i Var_{Y_i} e^Φ`.
    pub variation: f64,
    /// `inf |DF|` over the mesh.
    pub inf_abs_df: f64,
    pub violations: Vec<String>,
}

impl RychlikReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the extension and expansion conditions on a mesh of `mesh`
/// interior points per branch and estimates the variation of `e^Φ`.
pub fn check_rychlik(sys: &RychlikSystem, mesh: usize) -> Result<RychlikReport> {
    if mesh < 2 {
        return Err(invalid("mesh", "need at least two points per branch"));
    }
    let mut violations = Vec::new();
    let mut extensions_ok = true;
    for (i, b) in sys.branches.iter().enumerate() {
        let ok = b.extension.is_some_and(|z| z.lo < b.interval.lo && z.hi > b.interval.hi);
        if !ok {
            extensions_ok = false;
            if violations.len() < 8 {
                violations.push(format!("branch {i} on {} has no homeomorphic extension", b.interval));
            }
        }
    }
    let mut sup_phi = f64::NEG_INFINITY;
    let mut sup_at = (0, 0.0);
    let mut inf_df = f64::INFINITY;
    let mut variation = 0.0;
    for (i, b) in sys.branches.iter().enumerate() {
        let mut prev: Option<f64> = None;
        for k in 0..mesh {
            let y = b.interval.lo + b.interval.width() * (k as f64 + 0.5) / mesh as f64;
            let log_df = sys.map.log_abs_deriv_along(&b.word, y);
            inf_df = inf_df.min(log_df.exp());
            let phi = sys.potential.eval(log_df, b.tau());
            if phi > sup_phi {
                sup_phi = phi;
                sup_at = (i, y);
            }
            let e = phi.exp();
            if let Some(p) = prev {
                variation += (e - p).abs();
            }
            prev = Some(e);
        }
    }
    if !(sup_phi < 0.0) {
        violations.push(format!(
            "not expanding: Φ = {sup_phi:.4} ≥ 0 on branch {} at y = {}",
            sup_at.0, sup_at.1
        ));
    }
    if !variation.is_finite() {
        violations.push("variation of e^Φ is not finite on the mesh".into());
    }
    Ok(RychlikReport { extensions_ok, sup_phi, sup_phi_at: sup_at, variation, inf_abs_df: inf_df, violations })
}

/// Writes `bin_left,bin_right,density`.
pub fn write_density_csv<W: Write>(psi: &GridFunction, mut w: W) -> Result<()> {
    writeln!(w, "bin_left,bin_right,density")?;
    for (j, v) in psi.values.iter().enumerate() {
        let b = psi.grid.bin(j);
        writeln!(w, "{},{},{v}", b.lo, b.hi)?;
    }
    Ok(())
}

pub(crate) fn no_convergence(iterations: usize, residuals: &[f64]) -> Error {
    Error::NoConvergence { iterations, residuals: residuals.to_vec() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_constant_is_fixed() {
        let d = IntervalMap::<f64>::doubling();
        let sys = RychlikSystem::from_full_branch_map(&d, Potential::geometric()).unwrap();
        let grid = Grid::new(d.domain(), 256);
        let (l1, rem) = transfer_apply(&sys, &GridFunction::constant(grid, 1.0));
        assert_eq!(rem, 0.0);
        assert!(l1.values.iter().all(|&v| v == 1.0));
        let half = GridFunction::from_fn(grid, |x| if x < 0.5 { 1.0 } else { 0.0 });
        let (lh, _) = transfer_apply(&sys, &half);
        assert!(lh.values.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn skewlinear_lebesgue_is_conformal() {
        let s = IntervalMap::<f64>::skew_linear(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let sys = RychlikSystem::from_full_branch_map(&s, Potential::geometric()).unwrap();
        let (l1, _) = transfer_apply(&sys, &GridFunction::constant(Grid::new(s.domain(), 99), 1.0));
        assert!(l1.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn doubling_passes_rychlik_checks() {
        let d = IntervalMap::<f64>::doubling();
        let sys = RychlikSystem::from_full_branch_map(&d, Potential::geometric()).unwrap();
        let r = check_rychlik(&sys, 32).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!((r.sup_phi + 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.variation, 0.0);
    }

    #[test]
    fn logistic_over_the_whole_interval_is_not_expanding() {
        // DF = 4 - 8x drops below 1 near the critical point
        let l = IntervalMap::<f64>::logistic(4.0).unwrap();
        let sys = RychlikSystem::from_full_branch_map(&l, Potential::geometric()).unwrap();
        let r = check_rychlik(&sys, 64).unwrap();
        assert!(!r.passed());
        assert!(r.sup_phi > 0.0 && r.inf_abs_df < 1.0);
        assert!(!r.extensions_ok);
    }

    #[test]
    fn non_full_maps_are_rejected() {
        let t = IntervalMap::<f64>::tent(1.5).unwrap();
        assert!(RychlikSystem::from_full_branch_map(&t, Potential::geometric()).is_err());
    }
}
