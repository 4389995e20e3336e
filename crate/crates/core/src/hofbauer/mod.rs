//! The Hofbauer tower (canonical Markov extension) of a piecewise-monotone
//! map.
//!
//! Domains are the distinct intervals `f^n(Z_n)`, `Z_n ∈ P_n`, built
//! breadth first from the base `D_0 = I`. A domain `D` has an arrow to
//! `D' = f(D ∩ Z)` for each branch `Z` of `P_1` meeting the interior of `D`,
//! so the lifted map `f̂(x, D) = (f(x), D')` is Markov.

mod lift;

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::{IntervalMap, Symbol};
use crate::real::Real;

pub use lift::{lift_measure, Histogram, LiftedMeasure};

/// Relative identification tolerance for domain endpoints.
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_LEVEL: usize = 40;
pub const DEFAULT_MAX_DOMAINS: usize = 100_000;

/// Witness itineraries kept per domain.
const MAX_WITNESSES: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct TowerDomain<T> {
    pub id: usize,
    pub interval: Interval<T>,
    /// Minimal `n` with `D = f^n(Z_n)`.
    pub level: usize,
    /// Itineraries of cylinders `Z_n` with `f^n(Z_n) = D`.
    pub witnesses: Vec<Vec<Symbol>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub branch: Symbol,
}

/// Point `x̂ = (x, D)` of the tower.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerPoint<T> {
    pub x: T,
    pub domain: usize,
}

impl<T: Real> TowerPoint<T> {
    /// The natural projection `π`.
    pub fn project(&self) -> T {
        self.x
    }
}

/// Result of one lifted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step<T> {
    pub point: TowerPoint<T>,
    /// The point sat on a branch endpoint and the left tie-break chose the
    /// arrow.
    pub tie_break: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    pub max_level: usize,
    pub max_domains: usize,
    pub tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_level: DEFAULT_MAX_LEVEL, max_domains: DEFAULT_MAX_DOMAINS, tol: DEFAULT_TOL }
    }
}

#[derive(Clone, Debug)]
pub struct TowerGraph<T> {
    map: IntervalMap<T>,
    domains: Vec<TowerDomain<T>>,
    edges: Vec<Edge>,
    /// Outgoing arrows per domain, as `(branch, target)`.
    succ: Vec<Vec<(Symbol, usize)>>,
    /// Whether the successors of a domain were computed.
    expanded: Vec<bool>,
    truncated: bool,
    max_level_reached: usize,
    tol: f64,
}

/// `f64` key with a total order, for the endpoint index.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Breadth-first construction of the tower.
pub fn build_tower<T: Real>(map: &IntervalMap<T>, opts: BuildOptions) -> Result<TowerGraph<T>> {
    if opts.max_level < 1 {
        return Err(crate::error::invalid("max_level", "must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(crate::error::invalid("tol", "must be positive"));
    }
    let base = map.domain();
    let scale = base.width().as_f64();
    let mut g = TowerGraph {
        map: map.clone(),
        domains: vec![TowerDomain { id: 0, interval: base, level: 0, witnesses: vec![vec![]] }],
        edges: Vec::new(),
        succ: vec![Vec::new()],
        expanded: vec![false],
        truncated: false,
        max_level_reached: 0,
        tol: opts.tol,
    };
    let mut index: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    index.insert(Key(base.lo.as_f64()), vec![0]);
    let mut queue = VecDeque::from([0usize]);

    while let Some(id) = queue.pop_front() {
        let (dom, level) = (g.domains[id].interval, g.domains[id].level);
        if level >= opts.max_level {
            g.truncated = true;
            continue;
        }
        let witness = g.domains[id].witnesses[0].clone();
        let mut complete = true;
        for (b, branch) in map.branches().iter().enumerate() {
            let Some(piece) = dom.intersect_open(&branch.interval) else { continue };
            let img = branch.image_of(&piece);
            let img = Interval::new(img.lo.max(base.lo), img.hi.min(base.hi));
            let t = opts.tol * img.width().as_f64().max(1e-6 * scale);
            let (lo, hi) = (img.lo.as_f64(), img.hi.as_f64());
            let matches: Vec<usize> = index
                .range(Key(lo - t)..=Key(lo + t))
                .flat_map(|(_, ids)| ids.iter().copied())
                .filter(|&j| (g.domains[j].interval.hi.as_f64() - hi).abs() <= t)
                .collect();
            if matches.len() > 1 {
                return Err(Error::TowerConstruction(format!(
                    "tolerance {} identifies {} with several domains {:?}",
                    opts.tol, img, matches
                )));
            }
            let target = match matches.first() {
                Some(&j) => {
                    let w = &mut g.domains[j].witnesses;
                    if w.len() < MAX_WITNESSES {
                        let mut word = witness.clone();
                        word.push(b as Symbol);
                        w.push(word);
                    }
                    j
                }
                None => {
                    if g.domains.len() >= opts.max_domains {
                        g.truncated = true;
                        complete = false;
                        continue;
                    }
                    let j = g.domains.len();
                    let mut word = witness.clone();
                    word.push(b as Symbol);
                    g.domains.push(TowerDomain { id: j, interval: img, level: level + 1, witnesses: vec![word] });
                    g.succ.push(Vec::new());
                    g.expanded.push(false);
                    g.max_level_reached = g.max_level_reached.max(level + 1);
                    index.entry(Key(lo)).or_default().push(j);
                    queue.push_back(j);
                    j
                }
            };
            g.edges.push(Edge { from: id, to: target, branch: b as Symbol });
            g.succ[id].push((b as Symbol, target));
        }
        g.expanded[id] = complete;
    }
    g.verify_markov()?;
    Ok(g)
}

impl<T: Real> TowerGraph<T> {
    pub fn map(&self) -> &IntervalMap<T> {
        &self.map
    }

    pub fn domains(&self) -> &[TowerDomain<T>] {
        &self.domains
    }

    pub fn domain(&self, id: usize) -> &TowerDomain<T> {
        &self.domains[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn successors(&self, id: usize) -> &[(Symbol, usize)] {
        &self.succ[id]
    }

    pub fn base_id(&self) -> usize {
        0
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn max_level_reached(&self) -> usize {
        self.max_level_reached
    }

    /// Domains whose successors were cut by truncation.
    pub fn frontier(&self) -> Vec<usize> {
        (0..self.domains.len()).filter(|&i| !self.expanded[i]).collect()
    }

    pub fn is_expanded(&self, id: usize) -> bool {
        self.expanded[id]
    }

    /// Absolute endpoint tolerance used when identifying `interval`.
    pub fn identification_tol(&self, interval: &Interval<T>) -> f64 {
        self.tol * interval.width().as_f64().max(1e-6 * self.map.domain().width().as_f64())
    }

    /// Largest endpoint discrepancy between `f(D ∩ Z_b)` and the arrow
    /// target, relative to the admissible error; at most 1 for a Markov
    /// graph. The admissible error is the identification tolerance, capped
    /// at `1e-6 |I|` so that an oversized tolerance cannot hide merged
    /// domains.
    pub fn markov_defect(&self) -> f64 {
        let cap = 1e-6 * self.map.domain().width().as_f64();
        let base = self.map.domain();
        let mut worst: f64 = 0.0;
        for e in &self.edges {
            let d = self.domains[e.from].interval;
            let branch = self.map.branch(e.branch as usize);
            let Some(piece) = d.intersect_open(&branch.interval) else {
                return f64::INFINITY;
            };
            let img = branch.image_of(&piece);
            let img = Interval::new(img.lo.max(base.lo), img.hi.min(base.hi));
            let target = self.domains[e.to].interval;
            let err = (img.lo - target.lo).abs().max((img.hi - target.hi).abs()).as_f64();
            worst = worst.max(err / self.identification_tol(&img).min(cap));
        }
        worst
    }

    fn verify_markov(&self) -> Result<()> {
        let defect = self.markov_defect();
        if defect > 1.0 {
            return Err(Error::TowerConstruction(format!(
                "edge images miss their targets by {defect} tolerances"
            )));
        }
        Ok(())
    }

    /// `(x, D_0)`.
    pub fn lift(&self, x: T) -> TowerPoint<T> {
        TowerPoint { x, domain: 0 }
    }

    /// `f̂(x, D) = (f(x), D')`. The x-coordinate is computed by the map's own
    /// evaluator, so `π ∘ f̂ = f ∘ π` holds bit for bit.
    pub fn step(&self, p: TowerPoint<T>) -> Result<Step<T>> {
        let b = self.map.branch_index(p.x) as Symbol;
        let succ = &self.succ[p.domain];
        let mut tie_break = self.map.is_branch_boundary(p.x);
        let target = match succ.iter().find(|(s, _)| *s == b) {
            Some(&(_, t)) => t,
            None => {
                // x is an endpoint of D on a branch boundary and D meets
                // only the other side
                let other = succ.iter().find(|(s, _)| {
                    let i = &self.map.branch(*s as usize).interval;
                    i.contains(p.x)
                });
                match other {
                    Some(&(_, t)) => {
                        tie_break = true;
                        t
                    }
                    None if !self.expanded[p.domain] => return Err(Error::Truncated { domain: p.domain }),
                    None => {
                        return Err(Error::TowerConstruction(format!(
                            "no arrow from domain {} for x = {}",
                            p.domain, p.x
                        )))
                    }
                }
            }
        };
        Ok(Step { point: TowerPoint { x: self.map.apply(p.x), domain: target }, tie_break })
    }

    /// First `i ∈ [1, horizon]` with `f̂^i(p) ∈ target`.
    pub fn first_return(&self, target: &TowerTarget<T>, p: TowerPoint<T>, horizon: u64) -> Result<Option<u64>> {
        let mut q = p;
        for i in 1..=horizon {
            q = self.step(q)?.point;
            if target.contains(&q) {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// `Ĵ = {(y, D) : y ∈ J, Y' ⊆ D}` for a base interval `J` and its
    /// neighbourhood `Y'`: the part of `π^{-1}(J)` lying in domains that
    /// contain `Y'`, i.e. where `J` sits at least the neighbourhood gaps away
    /// from `∂D`.
    pub fn extendible_target(&self, j: Interval<T>, neighbourhood: Interval<T>) -> TowerTarget<T> {
        let mut parts = vec![Vec::new(); self.domains.len()];
        for d in &self.domains {
            if d.interval.contains_interval(&neighbourhood) {
                parts[d.id].push(j);
            }
        }
        TowerTarget { parts }
    }

    /// `π^{-1}(J)` restricted to the built domains.
    pub fn full_preimage(&self, j: Interval<T>) -> TowerTarget<T> {
        let parts = self
            .domains
            .iter()
            .map(|d| d.interval.intersect(&j).into_iter().collect())
            .collect();
        TowerTarget { parts }
    }

    /// Graphviz rendering: nodes `id:[l,r]@level`, one edge per arrow.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph tower {\n");
        for d in &self.domains {
            let _ = writeln!(
                s,
                "  {} [label=\"{}:[{},{}]@{}\"];",
                d.id, d.id, d.interval.lo, d.interval.hi, d.level
            );
        }
        for e in &self.edges {
            let _ = writeln!(s, "  {} -> {} [label=\"{}\"];", e.from, e.to, e.branch);
        }
        s.push_str("}\n");
        s
    }

    pub fn write_dot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_dot().as_bytes())?;
        Ok(())
    }
}

/// A union of intervals, one list per domain.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerTarget<T> {
    parts: Vec<Vec<Interval<T>>>,
}

impl<T: Real> TowerTarget<T> {
    pub fn new(n_domains: usize) -> Self {
        TowerTarget { parts: vec![Vec::new(); n_domains] }
    }

    pub fn insert(&mut self, domain: usize, interval: Interval<T>) {
        self.parts[domain].push(interval);
    }

    pub fn contains(&self, p: &TowerPoint<T>) -> bool {
        self.parts.get(p.domain).is_some_and(|v| v.iter().any(|i| i.contains(p.x)))
    }

    /// Domains carrying part of the target.
    pub fn domains(&self) -> impl Iterator<Item = usize> + '_ {
        self.parts.iter().enumerate().filter(|(_, v)| !v.is_empty()).map(|(i, _)| i)
    }
}
