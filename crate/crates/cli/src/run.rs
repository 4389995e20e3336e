use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rtstat::hofbauer::{build_tower, BuildOptions};
use rtstat::inducing::{build_inducing_scheme, kac_check, Extension, ScaledNeighbourhood, SchemeOptions};
use rtstat::maps::{lyapunov, OrbitSampler, SamplerConfig};
use rtstat::statistics::{
    aperiodic_centers, fluctuation_test, gibbs_trace, growth_diagnostic, ks_exponential, l2_check, matched_ball,
    ow_entropy, resolve_target, return_stats, write_ow_csv, Measure, MeasureSource, OwOptions, RtsOptions, Target,
};
use rtstat::transfer::{
    invariant_density, pressure_estimate, write_density_csv, write_pressure_sweep, GridFunction, Potential,
    PowerOptions, RychlikSystem, UlamOperator,
};
use rtstat::{Error, Result};
use serde_json::{json, Map as JsonMap, Value};

use crate::config::{Experiment, Params};

#[derive(Debug, Default)]
pub struct Report {
    pub metrics: JsonMap<String, Value>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
    /// Some configured threshold was not met.
    pub threshold_missed: bool,
}

impl Report {
    fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    fn warn(&mut self, w: Option<&String>) {
        if let Some(w) = w {
            self.warnings.push(w.clone());
        }
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.threshold_missed = true;
            self.warnings.push(message());
        }
    }

    fn create(&mut self, dir: &Path, name: &str) -> Result<BufWriter<File>> {
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(File::create(dir.join(name))?))
    }
}

pub fn run(exp: &Experiment, dir: &Path) -> Result<Report> {
    fs::create_dir_all(dir)?;
    let map = &exp.map;
    let cfg = SamplerConfig::new(exp.seed);
    let mut r = Report::default();
    match exp.params.clone() {
        Params::Tower { max_level, max_domains } => {
            let g = build_tower(map, BuildOptions { max_level, max_domains, ..BuildOptions::default() })?;
            g.write_dot(r.create(dir, "tower.dot")?)?;
            r.metric("domains", g.domains().len());
            r.metric("edges", g.edges().len());
            r.metric("max_level_reached", g.max_level_reached());
            r.metric("truncated", g.truncated());
            r.metric("markov_defect", g.markov_defect());
            if g.truncated() {
                r.warnings.push(format!("tower truncated at level {max_level}; {} frontier domains", g.frontier().len()));
            }
        }
        Params::Rts { center, level, ball, radius, samples, horizon, clock, ks_max } => {
            let z = match center {
                Some(z) => z,
                None => *aperiodic_centers(map, cfg.stream(1), 1).first().ok_or(Error::EmptySample)?,
            };
            let target = match (ball, radius) {
                (false, _) => Target::Cylinder { center: z, level },
                (true, Some(radius)) => Target::Ball { center: z, radius },
                (true, None) => matched_ball(map, z, level)?,
            };
            let opts = RtsOptions { samples, horizon, sampler: cfg, clock, ..RtsOptions::default() };
            let e = return_stats(map, target, &opts)?;
            e.write_csv(|t| (-t).exp(), r.create(dir, "rts.csv")?)?;
            let ks = ks_exponential(&e);
            let u = resolve_target(map, &target)?;
            r.metric("center", z);
            r.metric("U", json!([u.lo, u.hi]));
            r.metric("mu", e.mu);
            r.metric("mu_source", if e.mu_source == MeasureSource::Analytic { "analytic" } else { "occupation" });
            r.metric("mu_occupation", e.mu_occupation);
            r.metric("N", e.len());
            r.metric("censored_fraction", e.censored_fraction());
            r.metric("mean", e.mean());
            r.metric("ks", ks);
            r.warn(e.warning.as_ref());
            r.check(ks < ks_max, || format!("ks = {ks} is not below ks_max = {ks_max}"));
        }
        Params::Ow { levels, samples, horizon, entropy, rel_tol } => {
            let mut rows = Vec::new();
            for (i, &n) in levels.iter().enumerate() {
                let opts = OwOptions { samples, horizon, sampler: cfg.stream(i as u64) };
                let s = ow_entropy(map, n, &opts)?;
                r.warn(s.warning.as_ref());
                if let Some(h) = entropy {
                    let rel = (s.mean() / h - 1.0).abs();
                    r.check(rel <= rel_tol, || format!("n = {n}: mean {} is {:.1}% from h = {h}", s.mean(), 100.0 * rel));
                }
                rows.push(s);
            }
            write_ow_csv(&rows, r.create(dir, "ow.csv")?)?;
            let table: Vec<Value> = rows
                .iter()
                .map(|s| json!({"n": s.n, "mean": s.mean(), "stderr": s.stderr(), "censored_fraction": s.censored_fraction()}))
                .collect();
            r.metric("levels", table);
        }
        Params::Gibbs { points, n_max, gamma, gamma_prime } => {
            let mu = Measure::of_map(map)?;
            let mut sampler = OrbitSampler::new(map, cfg);
            let mut w = r.create(dir, "gibbs.csv")?;
            writeln!(w, "x,n,g_n,image_len,lower_ok,mid_ok,upper_ok")?;
            let (mut found, mut max_n0) = (0usize, 0usize);
            for _ in 0..points {
                let t = gibbs_trace(map, mu, sampler.next_sample(), 1..=n_max, gamma, gamma_prime)?;
                for row in &t.rows {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        t.x, row.n, row.g_n, row.image_len, row.lower_ok, row.mid_ok, row.upper_ok
                    )?;
                }
                if let Some(n0) = t.n0() {
                    found += 1;
                    max_n0 = max_n0.max(n0);
                }
            }
            w.flush()?;
            r.metric("points", points);
            r.metric("points_with_n0", found);
            r.metric("max_n0", max_n0);
            r.check(found == points, || format!("envelope never settles for {} of {points} points", points - found));
        }
        Params::Fluct { level, samples, horizon, h, sigma, ks_max } => {
            let opts = OwOptions { samples, horizon, sampler: cfg };
            let f = fluctuation_test(map, level, h, sigma, &opts)?;
            f.write_csv(r.create(dir, "fluct.csv")?)?;
            let summary = serde_json::to_value(f.summary()).expect("summary serialises");
            if let Value::Object(m) = summary {
                r.metrics.extend(m);
            }
            r.metric("censored", f.censored);
            r.check(f.ks < ks_max, || format!("ks = {} is not below ks_max = {ks_max}", f.ks));
        }
        Params::Density { y, delta, bins, depth } => {
            let ext = match delta {
                Some(d) => Extension::Scaled(ScaledNeighbourhood::new(y, d, map.domain())?),
                None => Extension::FirstReturn(y),
            };
            let scheme = build_inducing_scheme(map, ext, SchemeOptions { depth, ..SchemeOptions::default() })?;
            r.warn(scheme.warning.as_ref());
            let sys = RychlikSystem::from_scheme(map, &scheme, Potential::geometric())?;
            let op = UlamOperator::new(&sys, bins);
            let est = invariant_density(&op, PowerOptions::default())?;
            write_density_csv(&est.density, r.create(dir, "density.csv")?)?;
            r.metric("branches", scheme.branches.len());
            r.metric("uncovered", scheme.uncovered);
            r.metric("truncation_remainder", op.remainder);
            r.metric("lambda", est.lambda);
            r.metric("residual", est.residual);
            r.metric("iterations", est.iterations);
            if let Some(d) = map.density() {
                let mu_y = d.measure(&y);
                let exact = GridFunction {
                    grid: op.grid,
                    values: (0..bins).map(|j| d.measure(&op.grid.bin(j)) / op.grid.width() / mu_y).collect(),
                };
                let l1 = est.density.l1_distance(&exact);
                let tol = 10.0 * op.grid.width();
                r.metric("l1_to_analytic", l1);
                r.check(l1 <= tol, || format!("L1 distance {l1} to the analytic density exceeds {tol}"));
            }
        }
        Params::Pressure { deltas, bins } => {
            let rows = deltas
                .iter()
                .map(|&d| pressure_estimate(map, d, bins, PowerOptions::default()))
                .collect::<Result<Vec<_>>>()?;
            write_pressure_sweep(&rows, r.create(dir, "pressure.csv")?)?;
            let table: Vec<Value> = rows.iter().map(|p| json!({"delta": p.delta, "pressure": p.pressure})).collect();
            r.metric("sweep", table);
        }
        Params::Kac { y, samples, horizon, band } => {
            let mut s = OrbitSampler::new(map, cfg);
            let k = kac_check(&mut s, &y, samples, horizon)?;
            r.metric("mu_y", k.mu_y);
            r.metric("mean_return", k.mean_return);
            r.metric("product", k.product);
            r.metric("stderr", k.stderr);
            r.metric("censored", k.censored);
            let mut w = r.create(dir, "kac.csv")?;
            writeln!(w, "mu_y,mean_return,product,stderr,conditional_samples,censored")?;
            writeln!(w, "{},{},{},{},{},{}", k.mu_y, k.mean_return, k.product, k.stderr, k.conditional_samples, k.censored)?;
            w.flush()?;
            r.check((band.0..=band.1).contains(&k.product), || format!("Kac product {} outside [{}, {}]", k.product, band.0, band.1));
        }
        Params::Diag { samples, n_max } => {
            let mut s = OrbitSampler::new(map, cfg);
            let l = lyapunov(&mut s, samples as usize)?;
            let t = l2_check(map, cfg.stream(1), samples)?;
            r.metric("lyapunov", l.value);
            r.metric("lyapunov_known", map.family().known_lyapunov());
            r.metric("log_deriv_second_moment", t.estimate);
            r.metric("log_deriv_second_moment_known", map.family().known_log_deriv_second_moment());
            r.metric("l2_flagged", t.flagged);
            if t.flagged {
                r.warnings.push("Birkhoff estimate of ∫(log|Df|)² is unstable under doubling N".into());
            }
            let mut w = r.create(dir, "diag.csv")?;
            writeln!(w, "critical_point,n,log_derivative")?;
            let growth = growth_diagnostic(map, n_max);
            for g in &growth {
                for (i, v) in g.log_series.iter().enumerate() {
                    writeln!(w, "{},{},{}", g.critical_point, i + 1, v)?;
                }
                if g.non_growth {
                    r.warnings.push(format!("no derivative growth along the orbit of the critical value f({})", g.critical_point));
                }
            }
            w.flush()?;
            let table: Vec<Value> =
                growth.iter().map(|g| json!({"critical_point": g.critical_point, "alpha": g.alpha, "beta": g.beta})).collect();
            r.metric("growth", table);
        }
    }
    Ok(r)
}
