use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

use super::IntervalMap;

/// A numeric parameter, written as a number or as a string such as `"1/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Number(f64),
    Text(String),
    List(Vec<Param>),
}

impl Param {
    fn scalar(&self, name: &str) -> Result<f64> {
        match self {
            Param::Number(v) => Ok(*v),
            Param::Text(s) => parse_number(s),
            Param::List(_) => Err(Error::MapSpec(format!("parameter `{name}` must be a number"))),
        }
    }

    fn list(&self, name: &str) -> Result<Vec<f64>> {
        match self {
            Param::List(v) => v.iter().map(|p| p.scalar(name)).collect(),
            _ => Err(Error::MapSpec(format!("parameter `{name}` must be a list"))),
        }
    }
}

/// Numbers with optional `a/b` fractions and `sqrt(v)`.
fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::MapSpec(format!("cannot read `{s}` as a number"));
    if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        return Ok(parse_number(inner)?.sqrt());
    }
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        return Ok(a / b);
    }
    s.parse().map_err(|_| bad())
}

/// Textual description of a gallery map.
///
/// Reads either `family = "tent", params = { s = 1.4142135623730951 }` or the
/// compact tag form `"tent(1.4142135623730951)"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, Param>,
}

impl MapSpec {
    pub fn new(family: &str) -> Self {
        MapSpec { family: family.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), Param::Number(value));
        self
    }

    pub fn with_list(mut self, name: &str, values: &[f64]) -> Self {
        self.params.insert(name.to_string(), Param::List(values.iter().map(|&v| Param::Number(v)).collect()));
        self
    }

    /// Parses a TOML fragment holding `family` and `params`, either at top
    /// level or under a `map` key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = toml::from_str(text).map_err(|e| Error::MapSpec(e.to_string()))?;
        Self::from_value(&toml::Value::Table(value))
    }

    /// Accepts a table with `family`, a table with a `map` entry, or a tag
    /// string.
    pub fn from_value(value: &toml::Value) -> Result<Self> {
        match value {
            toml::Value::String(s) => s.parse(),
            toml::Value::Table(t) => {
                if let Some(inner) = t.get("map") {
                    return Self::from_value(inner);
                }
                value.clone().try_into().map_err(|e: toml::de::Error| Error::MapSpec(e.to_string()))
            }
            _ => Err(Error::MapSpec("expected a table or a tag string".into())),
        }
    }

    fn scalar(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .ok_or_else(|| Error::MapSpec(format!("{} needs parameter `{name}`", self.family)))?
            .scalar(name)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::MapSpec(format!("unknown parameter `{k}` for {}", self.family))),
            None => Ok(()),
        }
    }

    pub fn build<T: Real>(&self) -> Result<IntervalMap<T>> {
        match self.family.as_str() {
            "doubling" => {
                self.check_keys(&[])?;
                Ok(IntervalMap::doubling())
            }
            "tent" => {
                self.check_keys(&["s"])?;
                IntervalMap::tent(self.scalar("s")?)
            }
            "logistic" => {
                self.check_keys(&["a"])?;
                IntervalMap::logistic(self.scalar("a")?)
            }
            "cubic" => {
                self.check_keys(&["b"])?;
                IntervalMap::cubic(self.scalar("b")?)
            }
            "skewlinear" => {
                self.check_keys(&["w"])?;
                let w = self
                    .params
                    .get("w")
                    .ok_or_else(|| Error::MapSpec("skewlinear needs parameter `w`".into()))?
                    .list("w")?;
                IntervalMap::skew_linear(&w)
            }
            other => Err(Error::MapSpec(format!("unknown family `{other}`"))),
        }
    }
}

impl FromStr for MapSpec {
    type Err = Error;

    /// `doubling`, `tent(2)`, `logistic(4)`, `cubic(4)`, `skewlinear(1/3,2/3)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once('(') {
            Some((n, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::MapSpec(format!("unbalanced parentheses in `{s}`")))?;
                (n.trim(), split_args(inner))
            }
            None => (s, vec![]),
        };
        let spec = MapSpec::new(name);
        let nums = args.iter().map(|a| parse_number(a)).collect::<Result<Vec<_>>>()?;
        let one = |key: &str| -> Result<MapSpec> {
            match nums.as_slice() {
                [v] => Ok(MapSpec::new(name).with(key, *v)),
                _ => Err(Error::MapSpec(format!("{name} takes exactly one parameter"))),
            }
        };
        match name {
            "doubling" if nums.is_empty() => Ok(spec),
            "tent" => one("s"),
            "logistic" => one("a"),
            "cubic" => one("b"),
            "skewlinear" => Ok(spec.with_list("w", &nums)),
            _ => Err(Error::MapSpec(format!("cannot read map tag `{s}`"))),
        }
    }
}

/// Splits on commas outside parentheses, so `sqrt(2)` survives.
fn split_args(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.build::<f64>() {
            Ok(m) => write!(f, "{}", m.family()),
            Err(_) => write!(f, "{}", self.family),
        }
    }
}
