use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::maps::IntervalMap;

use super::{no_convergence, Grid, GridFunction, Potential, RychlikSystem};

/// Ulam discretisation of `L`: `(Lψ)_j = Σ_i w_ij ψ_i` with
/// `w_ij = |B_j|^{-1} ∫_{B_i ∩ F^{-1} B_j} e^Φ |DF| dy`.
///
/// Stored by columns (target bins), so applying the operator is a gather
/// and parallel evaluation is deterministic.
#[derive(Clone, Debug)]
pub struct UlamOperator {
    pub grid: Grid,
    columns: Vec<Vec<(u32, f64)>>,
    /// Bound on the mass of the branches missing from a truncated system.
    pub remainder: f64,
}

/// Gauss–Legendre nodes on `[-1, 1]`.
const GAUSS: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

impl UlamOperator {
    pub fn new(sys: &RychlikSystem, bins: usize) -> Self {
        let grid = Grid::new(sys.base(), bins);
        let columns = (0..grid.bins)
            .into_par_iter()
            .map(|j| column(sys, &grid, j))
            .collect();
        UlamOperator { grid, columns, remainder: sys.truncation_remainder() }
    }

    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        self.columns
            .par_iter()
            .map(|col| col.iter().map(|&(i, w)| w * psi[i as usize]).sum())
            .collect()
    }

    pub fn apply_fn(&self, psi: &GridFunction) -> GridFunction {
        GridFunction { grid: self.grid, values: self.apply(&psi.values) }
    }

    pub fn nonzeros(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// `(source, weight)` entries of column `j`.
    pub fn column(&self, j: usize) -> &[(u32, f64)] {
        &self.columns[j]
    }
}

fn column(sys: &RychlikSystem, grid: &Grid, j: usize) -> Vec<(u32, f64)> {
    let target = grid.bin(j);
    let bw = target.width();
    let mut out: Vec<(u32, f64)> = Vec::new();
    for (i, br) in sys.branches().iter().enumerate() {
        let Some(pre) = sys.map().pullback_along(&br.word, &target).and_then(|p| p.intersect_open(&br.interval)) else {
            continue;
        };
        let (a, b) = (grid.index(pre.lo), grid.index(pre.hi));
        for s in a..=b {
            let Some(piece) = grid.bin(s).intersect_open(&pre) else { continue };
            let mass = integrate(sys, i, &piece);
            if mass > 0.0 {
                out.push((s as u32, mass / bw));
            }
        }
    }
    out.sort_by_key(|e| e.0);
    out.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });
    out
}

/// `∫_piece e^Φ |DF| dy`.
fn integrate(sys: &RychlikSystem, i: usize, piece: &Interval<f64>) -> f64 {
    let word = &sys.branches()[i].word;
    let p = sys.potential();
    if p.delta == 1.0 && p.shift == 0.0 {
        return piece.width();
    }
    let map = sys.map();
    let f = |y: f64| {
        if sys.is_affine() {
            let df: f64 = word.iter().map(|&s| map.branch(s as usize).deriv(y).abs()).product();
            sys.weight(i, y) * df
        } else {
            (sys.phi(i, y) + map.log_abs_deriv_along(word, y)).exp()
        }
    };
    if sys.is_affine() {
        return f(piece.midpoint()) * piece.width();
    }
    let h = 0.5 * piece.width();
    let m = piece.midpoint();
    GAUSS.iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { tol: 1e-8, max_iter: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub struct DensityEstimate {
    /// Normalised so that `∫ψ = 1`.
    pub density: GridFunction,
    pub lambda: f64,
    /// `∫|Lψ - λψ|` at the last iterate.
    pub residual: f64,
    pub iterations: usize,
}

/// Normalised leading eigenfunction of the Ulam matrix by power iteration.
pub fn invariant_density(op: &UlamOperator, opts: PowerOptions) -> Result<DensityEstimate> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let n = op.grid.bins;
    let h = op.grid.width();
    let mut psi = vec![1.0 / (h * n as f64); n];
    let mut recent: Vec<f64> = Vec::new();
    for it in 1..=opts.max_iter {
        let next = op.apply(&psi);
        let mass: f64 = next.iter().sum::<f64>() * h;
        if !(mass > 0.0) {
            return Err(Error::ZeroNormalisation);
        }
        let lambda = mass; // ∫ψ = 1
        let residual = next.iter().zip(&psi).map(|(a, b)| (a - lambda * b).abs()).sum::<f64>() * h;
        psi = next.into_iter().map(|v| v / mass).collect();
        if recent.len() == 10 {
            recent.remove(0);
        }
        recent.push(residual);
        if residual < opts.tol {
            return Ok(DensityEstimate {
                density: GridFunction { grid: op.grid, values: psi },
                lambda,
                residual,
                iterations: it,
            });
        }
    }
    Err(no_convergence(opts.max_iter, &recent))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureEstimate {
    pub delta: f64,
    /// `log λ_1`
    pub pressure: f64,
    pub lambda: f64,
    pub residual: f64,
    pub remainder: f64,
}

/// `P(φ_δ) ≈ log λ_1` for `φ_δ = -δ log|Df|` on a full-branch map.
pub fn pressure_estimate(map: &IntervalMap<f64>, delta: f64, bins: usize, opts: PowerOptions) -> Result<PressureEstimate> {
    if !(0.0..=1.2).contains(&delta) {
        return Err(invalid("delta", format!("must lie in [0, 1.2], got {delta}")));
    }
    let sys = RychlikSystem::from_full_branch_map(map, Potential::scaled(delta))?;
    let op = UlamOperator::new(&sys, bins);
    if op.remainder > opts.tol {
        return Err(Error::TruncationRemainder { remainder: op.remainder, tol: opts.tol });
    }
    let d = invariant_density(&op, opts)?;
    Ok(PressureEstimate { delta, pressure: d.lambda.ln(), lambda: d.lambda, residual: d.residual, remainder: op.remainder })
}

/// Writes `delta,pressure,residual`.
pub fn write_pressure_sweep<W: Write>(rows: &[PressureEstimate], mut w: W) -> Result<()> {
    writeln!(w, "delta,pressure,residual")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.delta, r.pressure, r.residual)?;
    }
    Ok(())
}
