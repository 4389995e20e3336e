use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::real::Real;

use super::{IntervalMap, Symbol};

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionCell<T> {
    pub interval: Interval<T>,
    /// Branch indices of `x, f(x), …, f^{n-1}(x)` for interior `x`.
    pub itinerary: Vec<Symbol>,
}

/// Cells dropped while refining because their width fell below what the
/// scalar type resolves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PartitionDiagnostics {
    pub dropped: usize,
}

/// The level-`n` partition into maximal intervals of monotonicity of `f^n`,
/// ordered left to right.
#[derive(Clone, Debug)]
pub struct CylinderPartition<T> {
    level: usize,
    cells: Vec<PartitionCell<T>>,
    diagnostics: PartitionDiagnostics,
}

impl<T: Real> CylinderPartition<T> {
    /// `P_0 = {I}`.
    pub fn trivial(map: &IntervalMap<T>) -> Self {
        CylinderPartition {
            level: 0,
            cells: vec![PartitionCell { interval: map.domain(), itinerary: vec![] }],
            diagnostics: PartitionDiagnostics::default(),
        }
    }

    /// `P_1`: one cell per branch.
    pub fn branch_partition(map: &IntervalMap<T>) -> Self {
        let cells = map
            .branches()
            .iter()
            .enumerate()
            .map(|(i, b)| PartitionCell { interval: b.interval, itinerary: vec![i as Symbol] })
            .collect();
        CylinderPartition { level: 1, cells, diagnostics: PartitionDiagnostics::default() }
    }

    /// `P_{n+1}` from `P_n`: each cell of `P_n` is pulled back through every
    /// branch whose image meets its interior, prefixing the branch symbol.
    pub fn refine(&self, map: &IntervalMap<T>) -> Self {
        let mut cells = Vec::with_capacity(self.cells.len() * map.branches().len());
        let mut dropped = self.diagnostics.dropped;
        let resolution = T::epsilon() * T::lit(16.0) * map.domain().width();
        for (b, branch) in map.branches().iter().enumerate() {
            let start = cells.len();
            for cell in &self.cells {
                let Some(pre) = branch.pullback(&cell.interval) else { continue };
                if pre.width() <= resolution {
                    dropped += 1;
                    continue;
                }
                let mut itinerary = Vec::with_capacity(self.level + 1);
                itinerary.push(b as Symbol);
                itinerary.extend_from_slice(&cell.itinerary);
                cells.push(PartitionCell { interval: pre, itinerary });
            }
            if branch.direction == super::Direction::Decreasing {
                cells[start..].reverse();
            }
        }
        CylinderPartition { level: self.level + 1, cells, diagnostics: PartitionDiagnostics { dropped } }
    }

    /// `P_n` by repeated refinement. Storage grows like `|P_1|^n`; for deep
    /// levels use [`cylinder_of`] instead.
    pub fn at_level(map: &IntervalMap<T>, n: usize) -> Self {
        let mut p = Self::trivial(map);
        for _ in 0..n {
            p = p.refine(map);
        }
        p
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn cells(&self) -> &[PartitionCell<T>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn diagnostics(&self) -> PartitionDiagnostics {
        self.diagnostics
    }

    pub fn max_width(&self) -> T {
        self.cells.iter().map(|c| c.interval.width()).fold(T::zero(), T::max)
    }

    /// Index of the cell containing `x`, left tie-break at shared endpoints.
    pub fn locate(&self, x: T) -> Option<usize> {
        let i = self.cells.partition_point(|c| c.interval.hi < x);
        (i < self.cells.len() && self.cells[i].interval.contains(x)).then_some(i)
    }

    /// Writes `level,cell_index,left,right,itinerary`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,cell_index,left,right,itinerary")?;
        for (i, c) in self.cells.iter().enumerate() {
            writeln!(w, "{},{},{},{},{}", self.level, i, c.interval.lo, c.interval.hi, format_word(&c.itinerary))?;
        }
        Ok(())
    }
}

/// Symbols as a digit string, dot separated once a symbol needs two digits.
pub fn format_word(word: &[Symbol]) -> String {
    if word.iter().all(|&s| s < 10) {
        word.iter().map(|s| char::from(b'0' + *s as u8)).collect()
    } else {
        word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// `Z_n[x]` computed from the orbit of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder<T> {
    pub interval: Interval<T>,
    pub itinerary: Vec<Symbol>,
    /// Width tracked through the pullbacks. For unclipped affine steps this
    /// is a product of slopes and stays accurate long after the endpoint
    /// difference has lost its significant digits.
    pub width: T,
    /// Some orbit point sat exactly on a branch endpoint and was assigned by
    /// the left tie-break.
    pub ambiguous: bool,
}

/// The level-`n` cylinder containing `x`, found by following the orbit.
pub fn cylinder_of<T: Real>(map: &IntervalMap<T>, x: T, n: usize) -> Result<Cylinder<T>> {
    let dom = map.domain();
    if !dom.contains(x) {
        return Err(Error::OutsideDomain { x: x.as_f64(), lo: dom.lo.as_f64(), hi: dom.hi.as_f64() });
    }
    let mut itinerary = Vec::with_capacity(n);
    let mut ambiguous = false;
    let mut y = x;
    for _ in 0..n {
        let s = map.branch_index(y);
        ambiguous |= map.is_branch_boundary(y);
        itinerary.push(s as Symbol);
        y = map.branch(s).eval(y).max(dom.lo).min(dom.hi);
    }
    let (interval, width) = cylinder_interval(map, &itinerary)
        .ok_or_else(|| invalid("x", format!("empty cylinder for itinerary of {x}")))?;
    Ok(Cylinder { interval, itinerary, width, ambiguous })
}

/// Closure of the set of points following `word`, with its tracked width.
pub fn cylinder_interval<T: Real>(map: &IntervalMap<T>, word: &[Symbol]) -> Option<(Interval<T>, T)> {
    let Some((&last, rest)) = word.split_last() else {
        let d = map.domain();
        return Some((d, d.width()));
    };
    let mut cur = map.branch(last as usize).interval;
    let mut width = cur.width();
    for &s in rest.iter().rev() {
        let b = map.branch(s as usize);
        let img = b.image();
        let clipped = !img.contains_interval(&cur);
        // cylinders thinner than the local spacing of floats collapse to a
        // point; the tracked width carries on
        let pre = if cur.width() > T::zero() {
            b.pullback(&cur)?
        } else if img.contains(cur.lo) {
            let p = b.inverse(cur.lo).max(b.interval.lo).min(b.interval.hi);
            Interval::new(p, p)
        } else {
            return None;
        };
        width = match b.law {
            super::BranchLaw::Affine { slope, .. } if !clipped => width / slope.abs(),
            _ => pre.width(),
        };
        cur = pre;
    }
    Some((cur, width))
}
