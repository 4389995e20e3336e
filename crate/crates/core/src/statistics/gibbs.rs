use std::io::Write;
use std::ops::RangeInclusive;

use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::maps::{cylinder_of, AnalyticDensity, Cylinder, IntervalMap};
use crate::transfer::GridFunction;

/// Invariant measure used to weigh cylinders.
#[derive(Clone, Copy, Debug)]
pub enum Measure<'a> {
    Analytic(&'a AnalyticDensity),
    /// Piecewise constant density, e.g. an Ulam estimate.
    Grid(&'a GridFunction),
}

impl<'a> Measure<'a> {
    /// The density registered with the map.
    pub fn of_map(map: &'a IntervalMap<f64>) -> Result<Self> {
        map.density().map(Measure::Analytic).ok_or(Error::DensityUnavailable)
    }

    pub fn measure(&self, i: &Interval<f64>) -> f64 {
        match *self {
            Measure::Analytic(d) => d.measure(i),
            Measure::Grid(g) => {
                let Some(i) = i.intersect(&g.grid.interval()) else { return 0.0 };
                let (a, b) = (g.grid.index(i.lo), g.grid.index(i.hi));
                (a..=b)
                    .map(|j| g.values[j] * g.grid.bin(j).intersect(&i).map_or(0.0, |p| p.width()))
                    .sum()
            }
        }
    }

    fn cylinder(&self, c: &Cylinder<f64>) -> f64 {
        match *self {
            // the tracked width keeps full relative precision
            Measure::Analytic(AnalyticDensity::Uniform { lo, hi }) => c.width / (hi - lo),
            _ => self.measure(&c.interval),
        }
    }
}

/// Which envelope is checked.
#[derive(Clone, Copy)]
pub enum GibbsBounds<'a> {
    /// `n^{-2γ} ⩽ |fⁿ(Z_n)| n^{-γ} ⩽ μ(Z_n)|Dfⁿ(x)| ⩽ n^{γ'}`.
    Acip { gamma: f64, gamma_prime: f64 },
    /// `n^{-κ} ⩽ μ(Z_n) / e^{S_nφ(x) - nP} ⩽ n^κ`.
    Potential { phi: &'a (dyn Fn(f64) -> f64 + Sync), pressure: f64, kappa: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsRow {
    pub n: usize,
    pub g_n: f64,
    /// `|fⁿ(Z_n[x])|`
    pub image_len: f64,
    pub lower_ok: bool,
    /// Always true for the potential envelope, which has no middle term.
    pub mid_ok: bool,
    pub upper_ok: bool,
    /// `|Dfⁿ(x)|` or `e^{S_nφ}` left the floating range.
    pub underflow: bool,
}

impl GibbsRow {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.mid_ok && self.upper_ok
    }
}

#[derive(Clone, Debug)]
pub struct GibbsTrace {
    pub x: f64,
    pub rows: Vec<GibbsRow>,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub kappa: Option<f64>,
}

impl GibbsTrace {
    /// Smallest `n₀` such that every row with `n ⩾ n₀` satisfies the envelope.
    pub fn n0(&self) -> Option<usize> {
        let last_bad = self.rows.iter().rposition(|r| !r.ok());
        match last_bad {
            None => self.rows.first().map(|r| r.n),
            Some(i) => self.rows.get(i + 1).map(|r| r.n),
        }
    }

    /// Writes `n,g_n,image_len,lower_ok,mid_ok,upper_ok`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,g_n,image_len,lower_ok,mid_ok,upper_ok")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", r.n, r.g_n, r.image_len, r.lower_ok, r.mid_ok, r.upper_ok)?;
        }
        Ok(())
    }
}

/// `g_n = μ(Z_n[x])·|Dfⁿ(x)|` with the three-sided envelope.
pub fn gibbs_trace(
    map: &IntervalMap<f64>,
    measure: Measure<'_>,
    x: f64,
    n_range: RangeInclusive<usize>,
    gamma: f64,
    gamma_prime: f64,
) -> Result<GibbsTrace> {
    let l = map.max_critical_order();
    if !(gamma > 4.0 * l * l) {
        return Err(invalid("gamma", format!("must exceed 4ℓ²_max = {}", 4.0 * l * l)));
    }
    if !(gamma_prime > 2.0) {
        return Err(invalid("gamma_prime", "must exceed 2"));
    }
    trace(map, measure, x, n_range, GibbsBounds::Acip { gamma, gamma_prime })
}

/// `g_n = μ(Z_n[x]) / e^{S_nφ(x) - nP(φ)}` with the `n^{±κ}` envelope.
pub fn gibbs_trace_potential(
    map: &IntervalMap<f64>,
    measure: Measure<'_>,
    x: f64,
    n_range: RangeInclusive<usize>,
    phi: &(dyn Fn(f64) -> f64 + Sync),
    pressure: f64,
    kappa: f64,
) -> Result<GibbsTrace> {
    if !(kappa > 0.0) {
        return Err(invalid("kappa", "must be positive"));
    }
    trace(map, measure, x, n_range, GibbsBounds::Potential { phi, pressure, kappa })
}

fn trace(map: &IntervalMap<f64>, measure: Measure<'_>, x: f64, n_range: RangeInclusive<usize>, bounds: GibbsBounds<'_>) -> Result<GibbsTrace> {
    if *n_range.start() == 0 || n_range.is_empty() {
        return Err(invalid("n_range", "must be a nonempty range of positive integers"));
    }
    let mut rows = Vec::new();
    for n in n_range {
        let z = cylinder_of(map, x, n)?;
        let mu = measure.cylinder(&z);
        let image_len = map.image_along(&z.itinerary, &z.interval).width();
        let ln_n = (n as f64).ln();
        let row = match bounds {
            GibbsBounds::Acip { gamma, gamma_prime } => {
                let mut y = x;
                let mut d = 1.0f64;
                for (step, &s) in z.itinerary.iter().enumerate() {
                    let b = map.branch(s as usize);
                    let dy = b.deriv(y).abs();
                    if dy == 0.0 {
                        return Err(Error::CriticalOrbit { step, x: y });
                    }
                    d *= dy;
                    y = b.eval(y);
                }
                let g = mu * d;
                GibbsRow {
                    n,
                    g_n: g,
                    image_len,
                    lower_ok: image_len.ln() >= -gamma * ln_n,
                    mid_ok: image_len.ln() - gamma * ln_n <= g.ln(),
                    upper_ok: g.ln() <= gamma_prime * ln_n,
                    underflow: !(d.is_finite() && d > 0.0),
                }
            }
            GibbsBounds::Potential { phi, pressure, kappa } => {
                let mut y = x;
                let mut s_n = 0.0;
                for &s in &z.itinerary {
                    s_n += phi(y);
                    y = map.branch(s as usize).eval(y);
                }
                let ln_g = mu.ln() - (s_n - n as f64 * pressure);
                GibbsRow {
                    n,
                    g_n: ln_g.exp(),
                    image_len,
                    lower_ok: ln_g >= -kappa * ln_n,
                    mid_ok: true,
                    upper_ok: ln_g <= kappa * ln_n,
                    underflow: !ln_g.exp().is_normal(),
                }
            }
        };
        rows.push(row);
    }
    let (gamma, gamma_prime, kappa) = match bounds {
        GibbsBounds::Acip { gamma, gamma_prime } => (gamma, gamma_prime, None),
        GibbsBounds::Potential { kappa, .. } => (f64::NAN, f64::NAN, Some(kappa)),
    };
    Ok(GibbsTrace { x, rows, gamma, gamma_prime, kappa })
}
