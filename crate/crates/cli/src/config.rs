//! Experiment configs: one TOML file per run.
//!
//! ```toml
//! kind = "rts"
//! seed = 7
//! map = "doubling"
//! target = "cylinder"
//! level = 8
//! N = 100000
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use rtstat::inducing::ScaledNeighbourhood;
use rtstat::maps::{IntervalMap, MapSpec};
use rtstat::statistics::Measure;
use rtstat::Interval;
use serde_json::{json, Map as JsonMap, Value};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "field `{}`: {}", self.field, self.message)
        }
    }
}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Tower,
    Rts,
    Ow,
    Gibbs,
    Fluct,
    Density,
    Pressure,
    Kac,
    Diag,
}

impl Kind {
    pub const ALL: [(&'static str, Kind); 9] = [
        ("tower", Kind::Tower),
        ("rts", Kind::Rts),
        ("ow", Kind::Ow),
        ("gibbs", Kind::Gibbs),
        ("fluct", Kind::Fluct),
        ("density", Kind::Density),
        ("pressure", Kind::Pressure),
        ("kac", Kind::Kac),
        ("diag", Kind::Diag),
    ];

    pub fn name(self) -> &'static str {
        Kind::ALL.iter().find(|(_, k)| *k == self).unwrap().0
    }
}

/// Kind-specific parameters with defaults filled in.
#[derive(Clone, Debug)]
pub enum Params {
    Tower { max_level: usize, max_domains: usize },
    Rts {
        /// Default: the first aperiodic point drawn with the run's seed.
        center: Option<f64>,
        level: usize,
        ball: bool,
        /// Default: half the length of the level-`level` cylinder.
        radius: Option<f64>,
        samples: usize,
        horizon: u64,
        clock: Option<Interval<f64>>,
        ks_max: f64,
    },
    Ow { levels: Vec<usize>, samples: usize, horizon: u64, entropy: Option<f64>, rel_tol: f64 },
    Gibbs { points: usize, n_max: usize, gamma: f64, gamma_prime: f64 },
    Fluct { level: usize, samples: usize, horizon: u64, h: f64, sigma: f64, ks_max: f64 },
    Density { y: Interval<f64>, delta: Option<f64>, bins: usize, depth: usize },
    Pressure { deltas: Vec<f64>, bins: usize },
    Kac { y: Interval<f64>, samples: usize, horizon: u64, band: (f64, f64) },
    Diag { samples: u64, n_max: usize },
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub kind: Kind,
    pub seed: u64,
    pub map: IntervalMap<f64>,
    pub params: Params,
    pub out: Option<PathBuf>,
    /// Every field after defaulting, echoed into reports.
    pub resolved: JsonMap<String, Value>,
}

/// Typed access to the table; remembers which keys were read so leftovers
/// can be reported.
struct Fields {
    table: toml::Table,
    used: BTreeSet<String>,
    resolved: JsonMap<String, Value>,
}

impl Fields {
    fn raw(&mut self, key: &str) -> Option<&toml::Value> {
        self.used.insert(key.to_string());
        self.table.get(key)
    }

    fn number(v: &toml::Value, key: &str) -> Result<f64, ConfigError> {
        match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(i) => Ok(*i as f64),
            toml::Value::String(s) => parse_fraction(s).ok_or_else(|| err(key, format!("cannot read `{s}` as a number"))),
            other => Err(err(key, format!("expected a number, found {}", other.type_str()))),
        }
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = match self.raw(key) {
            Some(v) => Self::number(v, key)?,
            None => return Ok(None),
        };
        if !v.is_finite() {
            return Err(err(key, "must be finite"));
        }
        self.resolved.insert(key.to_string(), json!(v));
        Ok(Some(v))
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.opt_f64(key)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), json!(v));
        Ok(v)
    }

    fn opt_u64(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        let v = match self.raw(key) {
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(toml::Value::Float(x)) if *x >= 0.0 && x.fract() == 0.0 && *x < 1.8e19 => *x as u64,
            Some(other) => return Err(err(key, format!("expected a nonnegative integer, found {other}"))),
            None => return Ok(None),
        };
        self.resolved.insert(key.to_string(), json!(v));
        Ok(Some(v))
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        let v = self.opt_u64(key)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), json!(v));
        Ok(v)
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let v = self.u64(key, default as u64)?;
        if v == 0 {
            return Err(err(key, "must be at least 1"));
        }
        Ok(v as usize)
    }

    fn opt_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let arr = match self.raw(key) {
            Some(toml::Value::Array(a)) => a.clone(),
            Some(other) => return Err(err(key, format!("expected an array, found {}", other.type_str()))),
            None => return Ok(None),
        };
        let v = arr.iter().map(|x| Self::number(x, key)).collect::<Result<Vec<_>, _>>()?;
        self.resolved.insert(key.to_string(), json!(v));
        Ok(Some(v))
    }

    fn opt_interval(&mut self, key: &str) -> Result<Option<Interval<f64>>, ConfigError> {
        match self.opt_list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] < v[1] => Ok(Some(Interval::new(v[0], v[1]))),
            Some(_) => Err(err(key, "expected [lo, hi] with lo < hi")),
        }
    }

    fn interval(&mut self, key: &str) -> Result<Interval<f64>, ConfigError> {
        self.opt_interval(key)?.ok_or_else(|| err(key, "required"))
    }

    fn opt_str(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.raw(key) {
            Some(toml::Value::String(s)) => {
                let s = s.clone();
                self.resolved.insert(key.to_string(), json!(s));
                Ok(Some(s))
            }
            Some(other) => Err(err(key, format!("expected a string, found {}", other.type_str()))),
            None => Ok(None),
        }
    }

    fn leftovers(&self) -> Result<(), ConfigError> {
        match self.table.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(err(k, "unknown field for this kind")),
            None => Ok(()),
        }
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

fn in_domain(map: &IntervalMap<f64>, key: &str, y: Interval<f64>) -> Result<(), ConfigError> {
    if map.domain().contains_interval(&y) {
        Ok(())
    } else {
        Err(err(key, format!("{y} is not inside the domain {}", map.domain())))
    }
}

/// Parses and checks a config without running anything. `seed` overrides
/// the file's seed.
pub fn parse(text: &str, seed: Option<u64>) -> Result<Experiment, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| err("", format!("parse error: {e}")))?;
    let mut f = Fields { table, used: BTreeSet::new(), resolved: JsonMap::new() };

    let kind_name = f.opt_str("kind")?.ok_or_else(|| err("kind", "required"))?;
    let kind = Kind::ALL
        .iter()
        .find(|(n, _)| *n == kind_name)
        .map(|(_, k)| *k)
        .ok_or_else(|| {
            let names: Vec<&str> = Kind::ALL.iter().map(|(n, _)| *n).collect();
            err("kind", format!("unknown kind `{kind_name}`; expected one of {}", names.join(", ")))
        })?;

    let seed = match (seed, f.opt_u64("seed")?) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => return Err(err("seed", "required (or pass --seed)")),
    };
    f.resolved.insert("seed".into(), json!(seed));

    let map_value = f.raw("map").cloned().ok_or_else(|| err("map", "required"))?;
    let map_spec = MapSpec::from_value(&map_value).map_err(|e| err("map", e.to_string()))?;
    let map: IntervalMap<f64> = map_spec.build().map_err(|e| err("map", e.to_string()))?;
    f.resolved.insert("map".into(), json!({ "family": map_spec.family, "params": map_spec.params, "resolved": map.family().to_string() }));
    let out = f.opt_str("out")?.map(PathBuf::from);

    let params = match kind {
        Kind::Tower => Params::Tower { max_level: f.count("max_level", 40)?, max_domains: f.count("max_domains", 10_000)? },
        Kind::Rts => {
            let shape = f.opt_str("target")?.unwrap_or_else(|| "cylinder".into());
            f.resolved.insert("target".into(), json!(shape));
            let level = f.count("level", 8)?;
            let center = f.opt_f64("center")?;
            if let Some(z) = center {
                if !map.domain().contains(z) {
                    return Err(err("center", format!("{z} is outside the domain {}", map.domain())));
                }
            }
            let radius = f.opt_f64("radius")?;
            let ball = match shape.as_str() {
                "cylinder" if radius.is_some() => return Err(err("radius", "only valid with target = \"ball\"")),
                "cylinder" => false,
                "ball" if radius.is_some_and(|r| !(r > 0.0)) => return Err(err("radius", "must be positive")),
                "ball" => true,
                other => return Err(err("target", format!("expected `cylinder` or `ball`, found `{other}`"))),
            };
            let clock = f.opt_interval("clock")?;
            if let Some(y) = clock {
                in_domain(&map, "clock", y)?;
            }
            Params::Rts {
                center,
                level,
                ball,
                radius,
                samples: f.count("N", 100_000)?,
                horizon: f.u64("horizon", 100_000_000)?,
                clock,
                ks_max: f.f64("ks_max", 0.05)?,
            }
        }
        Kind::Ow => {
            let levels = match f.raw("n") {
                Some(toml::Value::Array(_)) => f.opt_list("n")?.unwrap_or_default(),
                Some(_) => vec![f.u64("n", 15)? as f64],
                None => vec![15.0],
            };
            if levels.iter().any(|&n| !(n >= 1.0 && n.fract() == 0.0)) {
                return Err(err("n", "levels must be positive integers"));
            }
            f.resolved.insert("n".into(), json!(levels));
            let entropy = match f.opt_f64("h")? {
                Some(h) => Some(h),
                None => map.family().known_entropy(),
            };
            f.resolved.insert("h".into(), json!(entropy));
            Params::Ow {
                levels: levels.iter().map(|&n| n as usize).collect(),
                samples: f.count("N", 2000)?,
                horizon: f.u64("horizon", 1_000_000_000)?,
                entropy,
                rel_tol: f.f64("rel_tol", 0.1)?,
            }
        }
        Kind::Gibbs => {
            let l = map.max_critical_order();
            let default_gamma = if l > 1.0 { 17.0 } else { 5.0 };
            let gamma = f.f64("gamma", default_gamma)?;
            if !(gamma > 4.0 * l * l) {
                return Err(err("gamma", format!("must exceed 4ℓ² = {}", 4.0 * l * l)));
            }
            let gamma_prime = f.f64("gamma_prime", 2.5)?;
            if !(gamma_prime > 2.0) {
                return Err(err("gamma_prime", "must exceed 2"));
            }
            Measure::of_map(&map).map_err(|e| err("map", e.to_string()))?;
            Params::Gibbs { points: f.count("points", 50)?, n_max: f.count("n_max", 25)?, gamma, gamma_prime }
        }
        Kind::Fluct => {
            let h = f.opt_f64("h")?.or_else(|| map.family().known_entropy()).ok_or_else(|| err("h", "required for this map"))?;
            let sigma = match f.opt_f64("sigma")? {
                Some(s) => s,
                None => {
                    let m2 = map.family().known_log_deriv_second_moment().ok_or_else(|| err("sigma", "required for this map"))?;
                    (m2 - h * h).max(0.0).sqrt()
                }
            };
            f.resolved.insert("h".into(), json!(h));
            f.resolved.insert("sigma".into(), json!(sigma));
            Params::Fluct {
                level: f.count("n", 20)?,
                samples: f.count("N", 5000)?,
                horizon: f.u64("horizon", 1_000_000_000)?,
                h,
                sigma,
                ks_max: f.f64("ks_max", 0.05)?,
            }
        }
        Kind::Density => {
            let y = f.interval("Y")?;
            in_domain(&map, "Y", y)?;
            let delta = f.opt_f64("delta")?;
            if let Some(d) = delta {
                ScaledNeighbourhood::new(y, d, map.domain()).map_err(|e| err("delta", e.to_string()))?;
            }
            Params::Density { y, delta, bins: f.count("bins", 1024)?, depth: f.count("depth", 30)? }
        }
        Kind::Pressure => {
            let deltas = f.opt_list("delta")?.unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]);
            if let Some(d) = deltas.iter().find(|d| !(0.0..=1.2).contains(*d)) {
                return Err(err("delta", format!("{d} is outside [0, 1.2]")));
            }
            f.resolved.insert("delta".into(), json!(deltas));
            Params::Pressure { deltas, bins: f.count("bins", 1024)? }
        }
        Kind::Kac => {
            let y = f.interval("Y")?;
            in_domain(&map, "Y", y)?;
            let band = f.opt_list("band")?.unwrap_or_else(|| vec![0.98, 1.02]);
            if band.len() != 2 || band[0] > band[1] {
                return Err(err("band", "expected [lo, hi]"));
            }
            f.resolved.insert("band".into(), json!(band));
            Params::Kac { y, samples: f.count("N", 1_000_000)?, horizon: f.u64("horizon", 100_000_000)?, band: (band[0], band[1]) }
        }
        Kind::Diag => Params::Diag { samples: f.count("N", 1_000_000)? as u64, n_max: f.count("n_max", 40)? },
    };
    f.leftovers()?;
    Ok(Experiment { kind, seed, map, params, out, resolved: f.resolved })
}
